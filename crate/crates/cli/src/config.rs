//! Run configuration: a JSON document plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qgraph::graph::graph_from_definition;
use qgraph::{discretize, Expr, MetricGraph, OperatorBundle, Scheme};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

/// Keys accepted by every command.
const COMMON_KEYS: &[&str] = &["graph", "scheme", "out", "seed"];

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// The merged configuration, echoed into `run.json`.
    pub raw: Map<String, Value>,
    base: PathBuf,
}

/// Parses `VALUE` as JSON, falling back to a plain string.
fn parse_value(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

/// Sets a dotted `key.path` inside `map`, creating objects on the way.
fn set_path(map: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), CliError> {
    let mut parts = key.split('.').peekable();
    let mut cur = map;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(CliError::Config(format!("override key '{key}' has an empty component")));
        }
        if parts.peek().is_none() {
            cur.insert(part.to_string(), value);
            return Ok(());
        }
        let next = cur.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        cur = next
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override key '{key}': '{part}' is not an object")))?;
    }
    Ok(())
}

impl RunConfig {
    /// Reads the config file (if any) and applies `KEY=VALUE` overrides.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let (mut raw, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", p.display())))?;
                let Value::Object(m) = v else {
                    return Err(CliError::Config(format!("config {} must be a JSON object", p.display())));
                };
                (m, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (Map::new(), PathBuf::new()),
        };
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{s}' is not of the form KEY=VALUE")))?;
            set_path(&mut raw, k.trim(), parse_value(v.trim()))?;
        }
        Ok(Self { raw, base })
    }

    /// Rejects top-level keys not used by the command.
    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        match self.raw.keys().find(|k| !COMMON_KEYS.contains(&k.as_str()) && !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::Config(format!("key '{k}' is not used by `qg {command}`"))),
            None => Ok(()),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("key '{key}': {e}"))))
            .transpose()
    }

    pub fn require<T: DeserializeOwned>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?.ok_or_else(|| CliError::Config(format!("missing key '{key}'")))
    }

    /// Paths in the config are relative to the config file.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// The graph: either an inline definition or the path of a definition file.
    pub fn graph(&self) -> Result<MetricGraph, CliError> {
        let def = match self.raw.get("graph") {
            None => return Err(CliError::Config("missing key 'graph'".into())),
            Some(Value::String(p)) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read graph file {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("cannot parse graph file {}: {e}", path.display())))?
            }
            Some(v) => v.clone(),
        };
        graph_from_definition(&def).map_err(|e| CliError::Config(format!("key 'graph': {e}")))
    }

    /// The flag wins over the `scheme` key; uniform by default.
    pub fn scheme(&self, flag: Option<&str>) -> Result<Scheme, CliError> {
        let s = match flag {
            Some(s) => s.to_string(),
            None => match self.get::<String>("scheme")? {
                Some(s) => s,
                None => return Ok(Scheme::Uniform),
            },
        };
        s.parse().map_err(|e| CliError::Config(format!("key 'scheme': {e}")))
    }

    pub fn bundle(&self, flag: Option<&str>) -> Result<OperatorBundle, CliError> {
        let g = self.graph()?;
        let scheme = self.scheme(flag)?;
        discretize(&g, scheme).map_err(|e| CliError::Config(format!("key 'graph': {e}")))
    }

    pub fn out(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        match flag {
            Some(p) => Ok(p.to_path_buf()),
            None => self.require::<String>("out").map(|s| self.resolve(&s)),
        }
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<Option<u64>, CliError> {
        match flag {
            Some(s) => Ok(Some(s)),
            None => self.get("seed"),
        }
    }

    /// Per-edge expressions in `var`: a single entry applies to every edge.
    pub fn edge_exprs(&self, key: &str, var: &str, edges: usize) -> Result<Option<Vec<Expr>>, CliError> {
        let Some(v) = self.raw.get(key) else { return Ok(None) };
        let parse = |s: &str| Expr::parse(s, &[var]).map_err(|e| CliError::Config(format!("key '{key}': {e}")));
        let one = |v: &Value| -> Result<Expr, CliError> {
            match v {
                Value::Number(n) => parse(&n.to_string()),
                Value::String(s) => parse(s),
                _ => Err(CliError::Config(format!("key '{key}': entries must be numbers or expressions in {var}"))),
            }
        };
        let list = match v {
            Value::Array(a) if a.len() == edges => a.iter().map(one).collect::<Result<Vec<_>, _>>()?,
            Value::Array(a) => {
                return Err(CliError::Config(format!("key '{key}': {} entries for {edges} edges", a.len())))
            }
            other => vec![one(other)?; edges],
        };
        Ok(Some(list))
    }

    /// A real number or a `[re, im]` pair.
    pub fn complex(&self, key: &str) -> Result<Option<Complex64>, CliError> {
        let bad = || CliError::Config(format!("key '{key}' must be a number or a [re, im] pair"));
        match self.raw.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(Some(Complex64::new(n.as_f64().ok_or_else(bad)?, 0.0))),
            Some(Value::Array(a)) if a.len() == 2 => {
                let re = a[0].as_f64().ok_or_else(bad)?;
                let im = a[1].as_f64().ok_or_else(bad)?;
                Ok(Some(Complex64::new(re, im)))
            }
            Some(_) => Err(bad()),
        }
    }
}

/// Samples per-edge expressions in `x` on the extended grid.
pub fn sample(b: &OperatorBundle, exprs: &[Expr]) -> Vec<Complex64> {
    b.sample(|m, x| exprs[m].eval(&[Complex64::new(x, 0.0)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_nested_keys() {
        let sets = vec!["options.maxPoints=50".to_string(), "tag=dumbbell".to_string(), "m=4".to_string()];
        let c = RunConfig::load(None, &sets).unwrap();
        assert_eq!(c.raw["options"]["maxPoints"], json!(50));
        assert_eq!(c.raw["tag"], json!("dumbbell"));
        assert_eq!(c.get::<usize>("m").unwrap(), Some(4));
        assert!(RunConfig::load(None, &["novalue".to_string()]).is_err());
    }

    #[test]
    fn errors_name_the_key() {
        let c = RunConfig::load(None, &["m=\"four\"".to_string()]).unwrap();
        let err = c.get::<usize>("m").unwrap_err().to_string();
        assert!(err.contains("'m'"), "{err}");
        let err = c.graph().unwrap_err().to_string();
        assert!(err.contains("'graph'"));
        let c = RunConfig::load(None, &[r#"graph={"source":[1],"target":[2]}"#.to_string()]).unwrap();
        assert!(c.graph().unwrap_err().to_string().contains("'length'"));
    }

    #[test]
    fn complex_values() {
        let c = RunConfig::load(None, &["mu=[0,-1]".to_string(), "nu=2".to_string()]).unwrap();
        assert_eq!(c.complex("mu").unwrap(), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(c.complex("nu").unwrap(), Some(Complex64::new(2.0, 0.0)));
        assert!(c.complex("tag").unwrap().is_none());
    }
}
