//! A small gallery of commonly studied graphs with overridable defaults.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{build_graph, EdgeShape, GraphOptions, Layout, MetricGraph, Nx};
use crate::error::{Error, Result};

pub const TEMPLATE_TAGS: &[&str] = &[
    "interval",
    "star",
    "Y",
    "dumbbell",
    "lasso",
    "necklace",
    "bubbleTower",
    "tetrahedron",
    "ring",
];

const COMMON_KEYS: &[&str] = &["LVec", "weight", "robinCoeff", "nx"];

#[derive(Debug, Clone, Serialize)]
pub struct TemplateInfo {
    pub tag: &'static str,
    pub description: &'static str,
    /// Template-specific keys in addition to `LVec`, `weight`, `robinCoeff`, `nx`.
    pub parameters: Vec<(&'static str, Value)>,
}

pub fn template_info(tag: &str) -> Result<TemplateInfo> {
    use serde_json::json;
    let (tag, description, parameters): (&'static str, &'static str, Vec<(&'static str, Value)>) =
        match tag {
            "interval" => ("interval", "single edge from vertex 1 to vertex 2", vec![("L", json!(1.0))]),
            "star" => (
                "star",
                "n edges directed from a centre vertex 1 to leaves 2..n+1",
                vec![("n", json!(3)), ("L", json!(1.0))],
            ),
            "Y" => (
                "Y",
                "three-edge star, lengths (3/2, 1, 1), Dirichlet at the two short leaves",
                vec![],
            ),
            "dumbbell" => (
                "dumbbell",
                "two loops joined by a handle: edges (1,1), (1,2), (2,2)",
                vec![("L", json!(4.0)), ("circumference", json!([2.0 * PI, 2.0 * PI]))],
            ),
            "lasso" => (
                "lasso",
                "a tail edge (1,2) ending in a loop (2,2)",
                vec![("L", json!(4.0)), ("circumference", json!(2.0 * PI))],
            ),
            "necklace" => (
                "necklace",
                "n strings alternating with n pearls made of two parallel edges, closed in a ring",
                vec![("n", json!(6)), ("L", json!(1.0)), ("circumference", json!(PI))],
            ),
            "bubbleTower" => (
                "bubbleTower",
                "two straight legs carrying a tower of three bubbles",
                vec![("L", json!(10.0)), ("circumferences", json!([6.0 * PI, 4.0 * PI, 2.0 * PI]))],
            ),
            "tetrahedron" => (
                "tetrahedron",
                "edges of a tetrahedron; spokes leave vertex 1",
                vec![("L", json!(1.0))],
            ),
            "ring" => ("ring", "a single loop at one vertex", vec![("circumference", json!(2.0 * PI))]),
            other => {
                return Err(Error::InvalidGraph(format!(
                    "unknown template '{other}', expected one of {}",
                    TEMPLATE_TAGS.join(", ")
                )))
            }
        };
    Ok(TemplateInfo { tag, description, parameters })
}

struct Params<'a> {
    tag: &'static str,
    map: &'a Map<String, Value>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.bad(key, "a number")),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .filter(|&n| n >= 1)
                .map(|n| n as usize)
                .ok_or_else(|| self.bad(key, "a positive integer")),
        }
    }

    fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| real_list(v).ok_or_else(|| self.bad(key, "a number or list of numbers"))).transpose()
    }

    fn bad(&self, key: &str, what: &str) -> Error {
        Error::InvalidGraph(format!("template {}: override '{key}' must be {what}", self.tag))
    }
}

fn real_list(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Number(n) => Some(vec![n.as_f64()?]),
        Value::Array(a) => a.iter().map(Value::as_f64).collect(),
        _ => None,
    }
}

/// Parses a Robin coefficient: a number, or `"dirichlet"`/`"D"`/`null` for
/// a Dirichlet vertex.
pub(crate) fn robin_value(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::Null => Some(f64::NAN),
        Value::String(s) if s.eq_ignore_ascii_case("dirichlet") || s == "D" => Some(f64::NAN),
        _ => None,
    }
}

pub(crate) fn robin_list(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(robin_value).collect(),
        other => Some(vec![robin_value(other)?]),
    }
}

pub(crate) fn nx_value(v: &Value) -> Option<Nx> {
    match v {
        Value::Number(n) => Some(Nx::Scalar(n.as_f64()?)),
        Value::Array(a) => a
            .iter()
            .map(|x| x.as_u64().map(|k| k as usize))
            .collect::<Option<Vec<_>>>()
            .map(Nx::PerEdge),
        _ => None,
    }
}

struct Shape {
    source: Vec<usize>,
    target: Vec<usize>,
    lengths: Vec<f64>,
    robin: Option<Vec<f64>>,
    layout: Box<dyn Fn(&[f64]) -> Layout>,
}

/// Builds a template graph. `overrides` may set `LVec` (edge lengths),
/// `weight`, `robinCoeff`, `nx`, and the template's own keys listed by
/// [`template_info`].
pub fn from_template(tag: &str, overrides: &Map<String, Value>) -> Result<MetricGraph> {
    let info = template_info(tag)?;
    for key in overrides.keys() {
        if !COMMON_KEYS.contains(&key.as_str()) && !info.parameters.iter().any(|(k, _)| k == key) {
            return Err(Error::InvalidGraph(format!(
                "template {}: invalid override key '{key}'",
                info.tag
            )));
        }
    }
    let p = Params { tag: info.tag, map: overrides };
    let mut shape = build_shape(&p)?;

    if let Some(l) = p.reals("LVec")? {
        shape.lengths = match l.len() {
            1 => vec![l[0]; shape.source.len()],
            n if n == shape.source.len() => l,
            n => {
                return Err(Error::InvalidGraph(format!(
                    "template {}: LVec has {n} entries for {} edges",
                    info.tag,
                    shape.source.len()
                )))
            }
        };
    }
    let robin = match p.get("robinCoeff") {
        Some(v) => Some(robin_list(v).ok_or_else(|| p.bad("robinCoeff", "numbers or \"dirichlet\""))?),
        None => shape.robin.clone(),
    };
    let nx = p
        .get("nx")
        .map(|v| nx_value(v).ok_or_else(|| p.bad("nx", "a number or list of integers")))
        .transpose()?;
    let layout = (shape.layout)(&shape.lengths);
    build_graph(
        &shape.source,
        &shape.target,
        &shape.lengths,
        GraphOptions {
            weights: p.reals("weight")?,
            robin,
            nx,
            potentials: None,
            layout: Some(layout),
        },
    )
}

fn build_shape(p: &Params) -> Result<Shape> {
    Ok(match p.tag {
        "interval" => Shape {
            source: vec![1],
            target: vec![2],
            lengths: vec![p.real("L", 1.0)?],
            robin: None,
            layout: Box::new(|l| Layout::planar(&[[0.0, 0.0], [l[0], 0.0]], vec![EdgeShape::Straight])),
        },
        "star" | "Y" => {
            let (n, lengths, robin) = if p.tag == "Y" {
                (3, vec![1.5, 1.0, 1.0], Some(vec![0.0, 0.0, f64::NAN, f64::NAN]))
            } else {
                let n = match p.reals("LVec")? {
                    Some(l) if l.len() > 1 => l.len(),
                    _ => p.count("n", 3)?,
                };
                (n, vec![p.real("L", 1.0)?; n], None)
            };
            Shape {
                source: vec![1; n],
                target: (2..n + 2).collect(),
                lengths,
                robin,
                layout: Box::new(move |l| {
                    let mut v = vec![[0.0, 0.0]];
                    for (j, &len) in l.iter().enumerate() {
                        let a = PI + 2.0 * PI * j as f64 / n as f64;
                        v.push([len * a.cos(), len * a.sin()]);
                    }
                    Layout::planar(&v, vec![EdgeShape::Straight; n])
                }),
            }
        }
        "dumbbell" => {
            let c = p.reals("circumference")?.unwrap_or(vec![2.0 * PI, 2.0 * PI]);
            let c = match c.len() {
                1 => vec![c[0], c[0]],
                2 => c,
                _ => return Err(p.bad("circumference", "one or two numbers")),
            };
            Shape {
                source: vec![1, 1, 2],
                target: vec![1, 2, 2],
                lengths: vec![c[0], p.real("L", 4.0)?, c[1]],
                robin: None,
                layout: Box::new(|l| {
                    Layout::planar(
                        &[[0.0, 0.0], [l[1], 0.0]],
                        vec![
                            EdgeShape::Circle { angle: PI, radius: l[0] / (2.0 * PI) },
                            EdgeShape::Straight,
                            EdgeShape::Circle { angle: 0.0, radius: l[2] / (2.0 * PI) },
                        ],
                    )
                }),
            }
        }
        "lasso" => Shape {
            source: vec![1, 2],
            target: vec![2, 2],
            lengths: vec![p.real("L", 4.0)?, p.real("circumference", 2.0 * PI)?],
            robin: None,
            layout: Box::new(|l| {
                Layout::planar(
                    &[[0.0, 0.0], [l[0], 0.0]],
                    vec![EdgeShape::Straight, EdgeShape::Circle { angle: 0.0, radius: l[1] / (2.0 * PI) }],
                )
            }),
        },
        "ring" => Shape {
            source: vec![1],
            target: vec![1],
            lengths: vec![p.real("circumference", 2.0 * PI)?],
            robin: None,
            layout: Box::new(|l| {
                Layout::planar(&[[0.0, 0.0]], vec![EdgeShape::Circle { angle: 0.0, radius: l[0] / (2.0 * PI) }])
            }),
        },
        "tetrahedron" => Shape {
            source: vec![1, 1, 1, 2, 2, 3],
            target: vec![2, 3, 4, 3, 4, 4],
            lengths: vec![p.real("L", 1.0)?; 6],
            robin: None,
            // flattened into a wheel: vertex 1 at the hub
            layout: Box::new(|l| {
                let mut v = vec![[0.0, 0.0]];
                for j in 0..3 {
                    let a = PI / 2.0 + 2.0 * PI * j as f64 / 3.0;
                    v.push([l[j] * a.cos(), l[j] * a.sin()]);
                }
                Layout::planar(&v, vec![EdgeShape::Straight; 6])
            }),
        },
        "necklace" => {
            let n = p.count("n", 6)?;
            let s = p.real("L", 1.0)?;
            let half = p.real("circumference", PI)? / 2.0;
            let (mut source, mut target, mut lengths) = (Vec::new(), Vec::new(), Vec::new());
            for i in 1..=n {
                let (a, b, c) = (2 * i - 1, 2 * i, if i == n { 1 } else { 2 * i + 1 });
                source.extend([a, b, b]);
                target.extend([b, c, c]);
                lengths.extend([s, half, half]);
            }
            Shape {
                source,
                target,
                lengths,
                robin: None,
                layout: Box::new(move |l| {
                    // vertices on a circle, angular share proportional to plotted span
                    let span: Vec<f64> = (0..n).flat_map(|i| [l[3 * i], 2.0 * l[3 * i + 1] / PI]).collect();
                    let total: f64 = span.iter().sum();
                    let r = total / (2.0 * PI);
                    let mut v = Vec::with_capacity(2 * n);
                    let mut a: f64 = 0.0;
                    for s in &span {
                        v.push([r * a.cos(), r * a.sin()]);
                        a += 2.0 * PI * s / total;
                    }
                    let mut shapes = Vec::with_capacity(3 * n);
                    for _ in 0..n {
                        shapes.extend([EdgeShape::Straight, EdgeShape::semicircle(false), EdgeShape::semicircle(true)]);
                    }
                    Layout::planar(&v, shapes)
                }),
            }
        }
        "bubbleTower" => {
            let leg = p.real("L", 10.0)?;
            let c = p.reals("circumferences")?.unwrap_or(vec![6.0 * PI, 4.0 * PI, 2.0 * PI]);
            if c.len() != 3 {
                return Err(p.bad("circumferences", "three numbers"));
            }
            Shape {
                source: vec![1, 2, 2, 2, 4, 4, 5],
                target: vec![2, 3, 4, 4, 5, 5, 5],
                lengths: vec![leg, leg, c[0] / 2.0, c[0] / 2.0, c[1] / 2.0, c[1] / 2.0, c[2]],
                robin: None,
                layout: Box::new(|l| {
                    let d1 = 2.0 * l[2] / PI;
                    let d2 = 2.0 * l[4] / PI;
                    Layout::planar(
                        &[[-l[0], 0.0], [0.0, 0.0], [l[1], 0.0], [0.0, d1], [0.0, d1 + d2]],
                        vec![
                            EdgeShape::Straight,
                            EdgeShape::Straight,
                            EdgeShape::semicircle(true),
                            EdgeShape::semicircle(false),
                            EdgeShape::semicircle(true),
                            EdgeShape::semicircle(false),
                            EdgeShape::Circle { angle: PI / 2.0, radius: l[6] / (2.0 * PI) },
                        ],
                    )
                }),
            }
        }
        _ => unreachable!("tag validated by template_info"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ov(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn y_graph_from_star() {
        let g = from_template(
            "star",
            &ov(json!({"LVec": [1.5, 1, 1], "robinCoeff": [0, 0, "dirichlet", "dirichlet"]})),
        )
        .unwrap();
        let y = from_template("Y", &Map::new()).unwrap();
        assert_eq!(g.edge_table(), y.edge_table());
        assert_eq!(g.edges(), y.edges());
        assert_eq!(g.vertices(), y.vertices());
    }

    #[test]
    fn balanced_star() {
        let g = from_template("star", &ov(json!({"LVec": 30, "weight": [2, 1, 1]}))).unwrap();
        assert_eq!(g.num_edges(), 3);
        assert!(g.edges().iter().all(|e| e.length == 30.0));
        assert_eq!(g.edge(0).weight, 2.0);
    }

    #[test]
    fn necklace_54() {
        let g = from_template("necklace", &ov(json!({"n": 54}))).unwrap();
        assert_eq!(g.num_vertices(), 108);
        assert_eq!(g.num_edges(), 162);
        assert!((g.edge(1).length - PI / 2.0).abs() < 1e-15);
        assert!((0..108).all(|n| g.degree(n).unwrap() == 3));
    }

    #[test]
    fn bubble_tower_shapes() {
        let g = from_template("bubbleTower", &Map::new()).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (5, 7));
        let l = g.layout().unwrap();
        let count = |f: fn(&EdgeShape) -> bool| l.edges.iter().filter(|s| f(s)).count();
        assert_eq!(count(|s| matches!(s, EdgeShape::Straight)), 2);
        assert_eq!(count(|s| matches!(s, EdgeShape::Arc { theta } if theta.abs() == PI)), 4);
        assert_eq!(count(|s| matches!(s, EdgeShape::Circle { .. })), 1);
    }

    #[test]
    fn every_template_builds_and_round_trips() {
        for tag in TEMPLATE_TAGS {
            let g = from_template(tag, &Map::new()).unwrap();
            let (s, t) = g.edge_table();
            let lengths: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
            let h = build_graph(&s, &t, &lengths, GraphOptions::default()).unwrap();
            assert_eq!(h.edge_table(), (s, t), "{tag}");
            let deg: usize = (0..g.num_vertices()).map(|n| g.degree(n).unwrap()).sum();
            assert_eq!(deg, 2 * g.num_edges());
        }
    }

    #[test]
    fn override_errors() {
        assert!(from_template("pentagon", &Map::new()).is_err());
        let err = from_template("ring", &ov(json!({"radius": 2}))).unwrap_err();
        assert!(err.to_string().contains("radius"));
        assert!(from_template("dumbbell", &ov(json!({"LVec": [1, 2]}))).is_err());
    }
}
