//! Plotting coordinates as plain data: vertex positions plus one shape
//! directive per edge.

use serde::{Deserialize, Serialize};

use super::MetricGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum EdgeShape {
    Straight,
    /// Circular arc turning through `theta` radians; positive bulges to the
    /// right of the source-to-target direction.
    Arc { theta: f64 },
    /// Full circle through the vertex of a self-loop. `angle` points from
    /// the vertex to the centre.
    Circle { angle: f64, radius: f64 },
    /// Explicit points from source to target, parameterized by arclength.
    Polyline { points: Vec<[f64; 3]> },
}

impl EdgeShape {
    pub fn semicircle(right: bool) -> Self {
        EdgeShape::Arc {
            theta: if right { std::f64::consts::PI } else { -std::f64::consts::PI },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<EdgeShape>,
}

impl Layout {
    pub fn new(vertices: Vec<[f64; 3]>, edges: Vec<EdgeShape>) -> Self {
        Self { vertices, edges }
    }

    /// Planar layout from `(x, y)` pairs.
    pub fn planar(vertices: &[[f64; 2]], edges: Vec<EdgeShape>) -> Self {
        Self::new(vertices.iter().map(|p| [p[0], p[1], 0.0]).collect(), edges)
    }

    pub(crate) fn validate(&self, g: &MetricGraph) -> Result<()> {
        if self.vertices.len() != g.num_vertices() || self.edges.len() != g.num_edges() {
            return Err(Error::InvalidGraph(format!(
                "layout has {} vertices and {} edges, graph has {} and {}",
                self.vertices.len(),
                self.edges.len(),
                g.num_vertices(),
                g.num_edges()
            )));
        }
        for (m, (shape, e)) in self.edges.iter().zip(g.edges()).enumerate() {
            let p0 = self.vertices[e.source];
            let p1 = self.vertices[e.target];
            let tol = 1e-9 * e.length.max(1.0);
            match shape {
                EdgeShape::Straight | EdgeShape::Arc { .. } if e.is_loop() => {
                    return Err(Error::InvalidGraph(format!(
                        "edge {} is a self-loop and needs a circle or polyline layout",
                        m + 1
                    )));
                }
                EdgeShape::Arc { theta } if !(theta.abs() > 0.0 && theta.abs() < 2.0 * std::f64::consts::PI) => {
                    return Err(Error::InvalidGraph(format!(
                        "edge {} arc angle {theta} outside (0, 2π)",
                        m + 1
                    )));
                }
                EdgeShape::Circle { radius, .. } => {
                    if !e.is_loop() {
                        return Err(Error::InvalidGraph(format!(
                            "edge {} is not a self-loop but has a circle layout",
                            m + 1
                        )));
                    }
                    if !(*radius > 0.0) {
                        return Err(Error::InvalidGraph(format!("edge {} circle radius must be positive", m + 1)));
                    }
                }
                EdgeShape::Polyline { points } => {
                    if points.len() < 2 {
                        return Err(Error::InvalidGraph(format!("edge {} polyline needs two points", m + 1)));
                    }
                    let a = dist(points[0], p0);
                    let b = dist(points[points.len() - 1], p1);
                    if a > tol || b > tol {
                        return Err(Error::InvalidGraph(format!(
                            "edge {} polyline endpoints miss their vertices by {:.3e}",
                            m + 1,
                            a.max(b)
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Position at edge coordinate `s`; `s` outside `[0, ℓ]` extrapolates
    /// along the shape.
    pub fn position(&self, g: &MetricGraph, m: usize, s: f64) -> [f64; 3] {
        let e = g.edge(m);
        let t = s / e.length;
        let p0 = self.vertices[e.source];
        let p1 = self.vertices[e.target];
        match &self.edges[m] {
            EdgeShape::Straight => lerp(p0, p1, t),
            EdgeShape::Arc { theta } => {
                let (dx, dy) = (p1[0] - p0[0], p1[1] - p0[1]);
                let d = dx.hypot(dy);
                let sg = theta.signum();
                let th = theta.abs();
                let r = d / (2.0 * (th / 2.0).sin());
                // left normal of the chord
                let (nx, ny) = (-dy / d, dx / d);
                let h = sg * r * (th / 2.0).cos();
                let c = [(p0[0] + p1[0]) / 2.0 + nx * h, (p0[1] + p1[1]) / 2.0 + ny * h];
                let a0 = (p0[1] - c[1]).atan2(p0[0] - c[0]);
                let a = a0 + sg * th * t;
                [c[0] + r * a.cos(), c[1] + r * a.sin(), p0[2] + (p1[2] - p0[2]) * t]
            }
            EdgeShape::Circle { angle, radius } => {
                let c = [p0[0] + radius * angle.cos(), p0[1] + radius * angle.sin()];
                let a = angle + std::f64::consts::PI + 2.0 * std::f64::consts::PI * t;
                [c[0] + radius * a.cos(), c[1] + radius * a.sin(), p0[2]]
            }
            EdgeShape::Polyline { points } => polyline_at(points, t),
        }
    }

    /// Samples the edge at the given edge coordinates.
    pub fn sample_edge(&self, g: &MetricGraph, m: usize, s: &[f64]) -> Vec<[f64; 3]> {
        s.iter().map(|&s| self.position(g, m, s)).collect()
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn polyline_at(points: &[[f64; 3]], t: f64) -> [f64; 3] {
    let seg: Vec<f64> = points.windows(2).map(|w| dist(w[0], w[1])).collect();
    let total: f64 = seg.iter().sum();
    if total == 0.0 {
        return points[0];
    }
    let target = t * total;
    let mut acc = 0.0;
    for (i, &l) in seg.iter().enumerate() {
        let last = i + 1 == seg.len();
        if target <= acc + l || last {
            let u = if l > 0.0 { (target - acc) / l } else { 0.0 };
            return lerp(points[i], points[i + 1], u);
        }
        acc += l;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphOptions};
    use std::f64::consts::PI;

    #[test]
    fn straight_samples() {
        let g = build_graph(&[1], &[2], &[1.0], GraphOptions::default()).unwrap();
        let g = g
            .with_layout(Layout::planar(&[[0.0, 0.0], [1.0, 0.0]], vec![EdgeShape::Straight]))
            .unwrap();
        let p = g.layout().unwrap().sample_edge(&g, 0, &[0.0, 0.5, 1.0]);
        assert_eq!(p, vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn circle_is_closed() {
        let g = build_graph(&[1], &[1], &[2.0 * PI], GraphOptions::default()).unwrap();
        let g = g
            .with_layout(Layout::planar(
                &[[0.0, 0.0]],
                vec![EdgeShape::Circle { angle: 0.0, radius: 1.0 }],
            ))
            .unwrap();
        let l = g.layout().unwrap();
        let a = l.position(&g, 0, 0.0);
        let b = l.position(&g, 0, 2.0 * PI);
        assert!(dist(a, b) < 1e-12);
        assert!(dist(a, [0.0, 0.0, 0.0]) < 1e-12);
        assert!((dist(l.position(&g, 0, PI), [2.0, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn semicircle_endpoints_and_bulge() {
        let g = build_graph(&[1], &[2], &[PI], GraphOptions::default()).unwrap();
        let g = g
            .with_layout(Layout::planar(&[[0.0, 0.0], [2.0, 0.0]], vec![EdgeShape::semicircle(true)]))
            .unwrap();
        let l = g.layout().unwrap();
        assert!(dist(l.position(&g, 0, 0.0), [0.0, 0.0, 0.0]) < 1e-12);
        assert!(dist(l.position(&g, 0, PI), [2.0, 0.0, 0.0]) < 1e-12);
        let mid = l.position(&g, 0, PI / 2.0);
        assert!(dist(mid, [1.0, -1.0, 0.0]) < 1e-12, "{mid:?}");
    }

    #[test]
    fn polyline_endpoint_mismatch() {
        let g = build_graph(&[1], &[2], &[1.0], GraphOptions::default()).unwrap();
        let bad = Layout::planar(
            &[[0.0, 0.0], [1.0, 0.0]],
            vec![EdgeShape::Polyline { points: vec![[0.0, 0.0, 0.0], [1.0, 1e-6, 0.0]] }],
        );
        assert!(g.clone().with_layout(bad).is_err());
        let ok = Layout::planar(
            &[[0.0, 0.0], [1.0, 0.0]],
            vec![EdgeShape::Polyline { points: vec![[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [1.0, 0.0, 0.0]] }],
        );
        let g = g.with_layout(ok).unwrap();
        let mid = g.layout().unwrap().position(&g, 0, 0.5);
        assert!(dist(mid, [0.5, 0.5, 0.0]) < 1e-12);
    }
}
