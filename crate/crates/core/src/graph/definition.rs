//! JSON graph definitions: either explicit edge lists or a template tag with
//! overrides.

use serde_json::{Map, Value};

use super::templates::{nx_value, robin_list};
use super::{build_graph, from_template, GraphOptions, MetricGraph};
use crate::error::{Error, Result};
use crate::expr::Expr;

const EXPLICIT_KEYS: &[&str] = &["source", "target", "length", "weight", "robin", "nx", "potential"];
const TEMPLATE_KEYS: &[&str] = &["template", "overrides", "potential"];

fn bad(key: &str, what: &str) -> Error {
    Error::InvalidGraph(format!("graph definition: key '{key}' must be {what}"))
}

fn vertex_list(v: &Map<String, Value>, key: &str) -> Result<Vec<usize>> {
    let x = v
        .get(key)
        .ok_or_else(|| Error::InvalidGraph(format!("graph definition: missing key '{key}'")))?;
    let list = match x {
        Value::Array(a) => a.iter().map(|e| e.as_u64().map(|k| k as usize)).collect::<Option<Vec<_>>>(),
        Value::Number(n) => n.as_u64().map(|k| vec![k as usize]),
        _ => None,
    };
    list.ok_or_else(|| bad(key, "a list of 1-based vertex ids"))
}

fn real_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
        Value::Array(a) => a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>().ok_or_else(|| bad(key, "numbers")),
        _ => Err(bad(key, "a number or a list of numbers")),
    }
}

/// One potential entry: `0` or `null` for none, another number for a
/// constant, a string expression in `x`, or polynomial coefficients.
fn potential_entry(v: &Value) -> Result<Option<Expr>> {
    match v {
        Value::Null => Ok(None),
        Value::Number(n) => {
            let c = n.as_f64().unwrap_or(0.0);
            Ok((c != 0.0).then(|| Expr::constant(c)))
        }
        Value::String(s) => Expr::parse(s, &["x"]).map(Some),
        Value::Array(a) => {
            let c = a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>();
            c.map(|c| Some(Expr::polynomial(&c, "x")))
                .ok_or_else(|| bad("potential", "polynomial coefficients"))
        }
        _ => Err(bad("potential", "a number, expression or coefficient list")),
    }
}

/// A list is read per edge when it has an entry that is not a number, or
/// when it has one number per edge on a multi-edge graph; any other value
/// applies to every edge.
fn potentials(v: &Value, edges: usize) -> Result<Vec<Option<Expr>>> {
    if let Value::Array(a) = v {
        let numeric = a.iter().all(Value::is_number);
        if !numeric || (a.len() == edges && edges > 1) {
            if a.len() != edges {
                return Err(bad("potential", &format!("one entry per edge ({edges})")));
            }
            return a.iter().map(potential_entry).collect();
        }
    }
    Ok(vec![potential_entry(v)?; edges])
}

/// Builds a graph from a definition object. Explicit graphs need `source`,
/// `target` and `length`; templates need `template` and accept an
/// `overrides` object.
pub fn graph_from_definition(def: &Value) -> Result<MetricGraph> {
    let map = def
        .as_object()
        .ok_or_else(|| Error::InvalidGraph("graph definition must be a JSON object".into()))?;
    let is_template = map.contains_key("template");
    let allowed = if is_template { TEMPLATE_KEYS } else { EXPLICIT_KEYS };
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            let hint = if is_template && EXPLICIT_KEYS.contains(&key.as_str()) {
                " (a definition gives either a template or an explicit edge list)"
            } else {
                ""
            };
            return Err(Error::InvalidGraph(format!("graph definition: unknown key '{key}'{hint}")));
        }
    }
    let graph = if is_template {
        let tag = map["template"].as_str().ok_or_else(|| bad("template", "a string"))?;
        let empty = Map::new();
        let overrides = match map.get("overrides") {
            None => &empty,
            Some(Value::Object(o)) => o,
            Some(_) => return Err(bad("overrides", "an object")),
        };
        from_template(tag, overrides)?
    } else {
        let source = vertex_list(map, "source")?;
        let target = vertex_list(map, "target")?;
        let lengths = real_list(
            map.get("length")
                .ok_or_else(|| Error::InvalidGraph("graph definition: missing key 'length'".into()))?,
            "length",
        )?;
        let weights = map.get("weight").map(|w| real_list(w, "weight")).transpose()?;
        let robin = map
            .get("robin")
            .map(|r| robin_list(r).ok_or_else(|| bad("robin", "numbers or \"dirichlet\"")))
            .transpose()?;
        let nx = map
            .get("nx")
            .map(|v| nx_value(v).ok_or_else(|| bad("nx", "a number or a list of integers")))
            .transpose()?;
        build_graph(
            &source,
            &target,
            &lengths,
            GraphOptions {
                weights,
                robin,
                nx,
                ..Default::default()
            },
        )?
    };
    match map.get("potential") {
        Some(p) => {
            let p = potentials(p, graph.num_edges())?;
            graph.with_potentials(p)
        }
        None => Ok(graph),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn explicit_definition() {
        let g = graph_from_definition(&json!({
            "source": [1, 1, 1, 2, 2],
            "target": [1, 1, 2, 2, 3],
            "length": [3.14159, 6.28318, 1, 6.28318, 2],
            "weight": [1, 1, 2, 1, 1],
            "robin": [1, 1, "dirichlet"],
            "potential": ["2*cos(2*x)", 0, 0, 0, 0]
        }))
        .unwrap();
        assert_eq!(g.num_edges(), 5);
        assert!(g.vertex(2).is_dirichlet());
        assert!(g.edge(0).potential.is_some() && g.edge(1).potential.is_none());
        assert_eq!(g.degree(0).unwrap(), 5);
    }

    #[test]
    fn template_definition() {
        let g = graph_from_definition(&json!({"template": "star", "overrides": {"LVec": 30, "weight": [2, 1, 1]}}))
            .unwrap();
        assert_eq!(g.edge(0).weight, 2.0);
        assert_eq!(g.edge(2).length, 30.0);
        let p = graph_from_definition(&json!({"template": "interval", "potential": [0, 0, 1]})).unwrap();
        assert!(p.edge(0).potential.is_some());
    }

    #[test]
    fn errors_name_the_key() {
        let e = graph_from_definition(&json!({"source": [1], "target": [2]})).unwrap_err();
        assert!(e.to_string().contains("'length'"), "{e}");
        let e = graph_from_definition(&json!({"source": [1], "target": [2], "length": 1, "colour": 3})).unwrap_err();
        assert!(e.to_string().contains("'colour'"));
        let e = graph_from_definition(&json!({"template": "ring", "source": [1]})).unwrap_err();
        assert!(e.to_string().contains("'source'"));
        assert!(graph_from_definition(&json!({"source": [1], "target": [2], "length": "long"})).is_err());
    }
}
