//! Extended/interior grids and the non-square operator family.
//!
//! Row layout of every square system: the interior rows of all edges in edge
//! order, then the vertex-condition rows grouped by vertex. Each vertex
//! contributes its flux (or Dirichlet) row first, followed by one continuity
//! row per additional incident end.

mod chebyshev;
mod export;
mod uniform;

pub use export::{read_state_csv, structure_summary, write_state_csv};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, Nx, VertexCondition};
use crate::linalg::{SparseMatrix, Triplets};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Uniform,
    Chebyshev,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Scheme::Uniform),
            "chebyshev" => Ok(Scheme::Chebyshev),
            _ => Err(Error::InvalidDiscretization(format!(
                "unknown scheme '{s}', expected uniform or chebyshev"
            ))),
        }
    }
}

/// Local operators of one edge, indexed within the edge.
pub(crate) struct EdgeBlock {
    x_ext: Vec<f64>,
    x_int: Vec<f64>,
    step: Option<f64>,
    l: Vec<(usize, usize, f64)>,
    p: Vec<(usize, usize, f64)>,
    d: Vec<(usize, usize, f64)>,
    weights: Vec<f64>,
    /// Value and outward derivative functionals at `[source, target]`.
    value: [Vec<(usize, f64)>; 2],
    outward: [Vec<(usize, f64)>; 2],
}

#[derive(Debug, Clone)]
pub struct EdgeGrid {
    pub x_ext: Vec<f64>,
    pub x_int: Vec<f64>,
    /// Mesh width, uniform scheme only.
    pub step: Option<f64>,
    pub ext: Range<usize>,
    pub int: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub scheme: Scheme,
    pub edges: Vec<EdgeGrid>,
    /// Quadrature weights aligned with the extended grid.
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn n_ext(&self) -> usize {
        self.weights.len()
    }

    pub fn n_int(&self) -> usize {
        self.edges.last().map_or(0, |e| e.int.end)
    }

    pub fn edge_range(&self, m: usize) -> Range<usize> {
        self.edges[m].ext.clone()
    }

    /// Extended-grid coordinates of all edges, concatenated.
    pub fn x_ext(&self) -> Vec<f64> {
        self.edges.iter().flat_map(|e| e.x_ext.iter().copied()).collect()
    }
}

/// All operators for one discretization of one graph.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    graph: MetricGraph,
    grid: Grid,
    pub l_int: SparseMatrix,
    pub p_int: SparseMatrix,
    pub m_vc: SparseMatrix,
    pub m_nh: SparseMatrix,
    pub l_vc: SparseMatrix,
    pub p_vc: SparseMatrix,
    pub l_0: SparseMatrix,
    pub p_0: SparseMatrix,
    pub d: SparseMatrix,
    /// Rows `|V| × N_ext` reading off vertex values.
    pub vertex_values: SparseMatrix,
    /// Row of each vertex's flux or Dirichlet condition in the square systems.
    pub vertex_rows: Vec<usize>,
    /// Potential sampled on the extended grid.
    pub potential: Vec<f64>,
    /// Edge weight of every extended-grid point.
    pub point_weights: Vec<f64>,
}

/// Per-edge point counts for a scheme.
pub fn resolve_nx(graph: &MetricGraph, scheme: Scheme) -> Result<Vec<usize>> {
    let min = match scheme {
        Scheme::Uniform => 2,
        Scheme::Chebyshev => 3,
    };
    let n: Vec<usize> = match graph.nx() {
        Nx::Scalar(v) => match scheme {
            Scheme::Uniform => graph
                .edges()
                .iter()
                .map(|e| ((v * e.length).round() as usize).max(2))
                .collect(),
            Scheme::Chebyshev => vec![v.round() as usize; graph.num_edges()],
        },
        Nx::PerEdge(v) => v.clone(),
    };
    if let Some(m) = n.iter().position(|&k| k < min) {
        return Err(Error::InvalidDiscretization(format!(
            "edge {} has {} points, the {:?} scheme needs at least {min}",
            m + 1,
            n[m],
            scheme
        )));
    }
    Ok(n)
}

/// Builds the grid and operator family.
pub fn discretize(graph: &MetricGraph, scheme: Scheme) -> Result<OperatorBundle> {
    let nx = resolve_nx(graph, scheme)?;
    let ne = graph.num_edges();
    let nv = graph.num_vertices();

    let mut blocks = Vec::with_capacity(ne);
    for (m, e) in graph.edges().iter().enumerate() {
        let v = |x: f64| e.potential.as_ref().map_or(0.0, |p| p.eval_real(&[x]));
        let b = match scheme {
            Scheme::Uniform => uniform::edge_block(e.length, nx[m], &v),
            Scheme::Chebyshev => chebyshev::edge_block(e.length, nx[m], &v),
        };
        if b.x_ext.iter().map(|&x| v(x)).any(|y| !y.is_finite()) {
            return Err(Error::InvalidDiscretization(format!(
                "potential on edge {} is not finite on the grid",
                m + 1
            )));
        }
        blocks.push(b);
    }

    let mut edges = Vec::with_capacity(ne);
    let (mut oe, mut oi) = (0, 0);
    for b in &blocks {
        let ext = oe..oe + b.x_ext.len();
        let int = oi..oi + b.x_int.len();
        oe = ext.end;
        oi = int.end;
        edges.push(EdgeGrid {
            x_ext: b.x_ext.clone(),
            x_int: b.x_int.clone(),
            step: b.step,
            ext,
            int,
        });
    }
    let (n_ext, n_int) = (oe, oi);
    debug_assert_eq!(n_ext, n_int + 2 * ne);

    let mut l = Triplets::new(n_int, n_ext);
    let mut p = Triplets::new(n_int, n_ext);
    let mut d = Triplets::new(n_ext, n_ext);
    let mut weights = vec![0.0; n_ext];
    let mut potential = vec![0.0; n_ext];
    let mut point_weights = vec![0.0; n_ext];
    for (m, (b, g)) in blocks.iter().zip(&edges).enumerate() {
        let (ce, ci) = (g.ext.start, g.int.start);
        for &(i, j, v) in &b.l {
            l.push(ci + i, ce + j, v);
        }
        for &(i, j, v) in &b.p {
            p.push(ci + i, ce + j, v);
        }
        for &(i, j, v) in &b.d {
            d.push(ce + i, ce + j, v);
        }
        weights[g.ext.clone()].copy_from_slice(&b.weights);
        let e = graph.edge(m);
        for (k, &x) in b.x_ext.iter().enumerate() {
            potential[ce + k] = e.potential.as_ref().map_or(0.0, |p| p.eval_real(&[x]));
            point_weights[ce + k] = e.weight;
        }
    }

    let slot = |end: End| match end {
        End::Source => 0,
        End::Target => 1,
    };
    let mut mvc = Triplets::new(2 * ne, n_ext);
    let mut mnh = Triplets::new(n_ext, nv);
    let mut vv = Triplets::new(nv, n_ext);
    let mut vertex_rows = Vec::with_capacity(nv);
    let mut row = 0;
    for n in 0..nv {
        let ends = graph.incident_ends(n)?;
        let (m1, end1) = ends[0];
        let anchor: Vec<(usize, f64)> = blocks[m1].value[slot(end1)]
            .iter()
            .map(|&(k, v)| (edges[m1].ext.start + k, v))
            .collect();
        for &(j, v) in &anchor {
            vv.push(n, j, v);
        }
        match graph.vertex(n) {
            VertexCondition::Dirichlet => {
                for &(j, v) in &anchor {
                    mvc.push(row, j, v);
                }
            }
            VertexCondition::RobinKirchhoff { alpha } => {
                for &(m, end) in ends {
                    let w = graph.edge(m).weight;
                    for &(k, v) in &blocks[m].outward[slot(end)] {
                        mvc.push(row, edges[m].ext.start + k, w * v);
                    }
                }
                if *alpha != 0.0 {
                    for &(j, v) in &anchor {
                        mvc.push(row, j, alpha * v);
                    }
                }
            }
        }
        mnh.push(n_int + row, n, 1.0);
        vertex_rows.push(n_int + row);
        row += 1;
        for &(m, end) in &ends[1..] {
            for &(j, v) in &anchor {
                mvc.push(row, j, v);
            }
            for &(k, v) in &blocks[m].value[slot(end)] {
                mvc.push(row, edges[m].ext.start + k, -v);
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, 2 * ne);

    let l_int = l.build();
    let p_int = p.build();
    let m_vc = mvc.build();
    let zeros = SparseMatrix::zeros(2 * ne, n_ext);
    Ok(OperatorBundle {
        graph: graph.clone(),
        grid: Grid {
            scheme,
            edges,
            weights,
        },
        l_vc: SparseMatrix::vstack(&[&l_int, &m_vc]),
        p_vc: SparseMatrix::vstack(&[&p_int, &m_vc]),
        l_0: SparseMatrix::vstack(&[&l_int, &zeros]),
        p_0: SparseMatrix::vstack(&[&p_int, &zeros]),
        l_int,
        p_int,
        m_vc,
        m_nh: mnh.build(),
        d: d.build(),
        vertex_values: vv.build(),
        vertex_rows,
        potential,
        point_weights,
    })
}

/// Samples of a graph function split by edge, plus vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSamples<S> {
    pub edges: Vec<Vec<S>>,
    pub vertices: Vec<S>,
}

/// Per-edge data for [`OperatorBundle::apply_functions`].
pub enum EdgeFn<'a, S> {
    Const(S),
    Map(Box<dyn Fn(f64) -> S + 'a>),
}

impl<'a, S> EdgeFn<'a, S> {
    pub fn map(f: impl Fn(f64) -> S + 'a) -> Self {
        EdgeFn::Map(Box::new(f))
    }
}

impl OperatorBundle {
    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.grid.scheme
    }

    pub fn n_ext(&self) -> usize {
        self.grid.n_ext()
    }

    pub fn n_int(&self) -> usize {
        self.grid.n_int()
    }

    pub fn edge_range(&self, m: usize) -> Range<usize> {
        self.grid.edge_range(m)
    }

    pub fn check_len(&self, len: usize, context: &'static str) -> Result<()> {
        if len == self.n_ext() {
            Ok(())
        } else {
            Err(Error::Dimension {
                context,
                expected: self.n_ext(),
                got: len,
            })
        }
    }

    /// Splits a column into per-edge samples and vertex values.
    pub fn column_to_graph<S: Scalar>(&self, u: &[S]) -> Result<EdgeSamples<S>> {
        self.check_len(u.len(), "column_to_graph")?;
        Ok(EdgeSamples {
            edges: (0..self.graph.num_edges()).map(|m| u[self.edge_range(m)].to_vec()).collect(),
            vertices: self.vertex_values.mul_vec(u),
        })
    }

    /// Concatenates per-edge samples into a column.
    pub fn graph_to_column<S: Scalar>(&self, edges: &[Vec<S>]) -> Result<Vec<S>> {
        if edges.len() != self.graph.num_edges() {
            return Err(Error::Dimension {
                context: "graph_to_column edges",
                expected: self.graph.num_edges(),
                got: edges.len(),
            });
        }
        let mut out = Vec::with_capacity(self.n_ext());
        for (m, e) in edges.iter().enumerate() {
            let r = self.edge_range(m);
            if e.len() != r.len() {
                return Err(Error::Dimension {
                    context: "graph_to_column samples",
                    expected: r.len(),
                    got: e.len(),
                });
            }
            out.extend_from_slice(e);
        }
        Ok(out)
    }

    /// Samples `f(edge, x)` on every extended-grid point.
    pub fn sample<S, F: Fn(usize, f64) -> S>(&self, f: F) -> Vec<S> {
        let mut out = Vec::with_capacity(self.n_ext());
        for (m, e) in self.grid.edges.iter().enumerate() {
            out.extend(e.x_ext.iter().map(|&x| f(m, x)));
        }
        out
    }

    /// One function or constant per edge.
    pub fn apply_functions<S: Clone>(&self, fns: &[EdgeFn<'_, S>]) -> Result<Vec<S>> {
        if fns.len() != self.graph.num_edges() {
            return Err(Error::Dimension {
                context: "apply_functions",
                expected: self.graph.num_edges(),
                got: fns.len(),
            });
        }
        Ok(self.sample(|m, x| match &fns[m] {
            EdgeFn::Const(c) => c.clone(),
            EdgeFn::Map(f) => f(x),
        }))
    }

    /// Samples a function of the plotting coordinates.
    pub fn apply_graphical_function<S, F: Fn([f64; 3]) -> S>(&self, f: F) -> Result<Vec<S>> {
        let layout = self.graph.layout().ok_or_else(|| {
            Error::InvalidArgument("graph has no plotting coordinates".into())
        })?;
        Ok(self.sample(|m, x| f(layout.position(&self.graph, m, x))))
    }

    /// Plot coordinates of every extended-grid point.
    pub fn plot_points(&self) -> Result<Vec<[f64; 3]>> {
        self.apply_graphical_function(|p| p)
    }

    /// First derivative on each edge.
    pub fn derivative<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        self.d.mul_vec(u)
    }
}
