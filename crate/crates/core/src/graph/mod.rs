//! Directed metric graphs with continuity plus Robin–Kirchhoff or Dirichlet
//! vertex conditions.
//!
//! Vertex and edge indices are 0-based throughout the Rust API. Input
//! sequences passed to [`build_graph`] and all file formats use 1-based ids.

mod definition;
mod layout;
mod templates;

pub use definition::graph_from_definition;
pub use layout::{EdgeShape, Layout};
pub use templates::{from_template, template_info, TemplateInfo, TEMPLATE_TAGS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum VertexCondition {
    /// `Σ w_m ψ_m'(v) + α ψ(v) = φ` with outward derivatives; `α = 0` is
    /// Neumann–Kirchhoff.
    RobinKirchhoff { alpha: f64 },
    Dirichlet,
}

impl VertexCondition {
    pub const NEUMANN: Self = Self::RobinKirchhoff { alpha: 0.0 };

    /// Maps the numeric convention where `NaN` marks a Dirichlet vertex.
    pub fn from_coefficient(alpha: f64) -> Self {
        if alpha.is_nan() {
            Self::Dirichlet
        } else {
            Self::RobinKirchhoff { alpha }
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Dirichlet)
    }

    /// Robin coefficient, zero for Dirichlet vertices.
    pub fn alpha(&self) -> f64 {
        match self {
            Self::RobinKirchhoff { alpha } => *alpha,
            Self::Dirichlet => 0.0,
        }
    }
}

/// Which end of an edge touches a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum End {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub length: f64,
    pub weight: f64,
    /// Potential `V(x)` in the variable `x`; `None` means `V ≡ 0`.
    pub potential: Option<Expr>,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.source == self.target
    }
}

/// Requested discretization density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Nx {
    /// Points per unit length (uniform) or per edge (Chebyshev).
    Scalar(f64),
    /// Interior points on each edge, used verbatim.
    PerEdge(Vec<usize>),
}

impl Default for Nx {
    fn default() -> Self {
        Nx::Scalar(20.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    vertices: Vec<VertexCondition>,
    edges: Vec<Edge>,
    nx: Nx,
    layout: Option<Layout>,
    #[serde(skip)]
    incidence: Vec<Vec<(usize, End)>>,
}

/// Optional arguments of [`build_graph`]. Sequences of length one broadcast
/// to every edge or vertex.
#[derive(Debug, Clone, Default)]
pub struct GraphOptions {
    pub weights: Option<Vec<f64>>,
    /// Robin coefficients per vertex, `NaN` marking Dirichlet vertices.
    pub robin: Option<Vec<f64>>,
    pub nx: Option<Nx>,
    pub potentials: Option<Vec<Option<Expr>>>,
    pub layout: Option<Layout>,
}

/// Builds and validates a graph from 1-based source/target vertex ids.
pub fn build_graph(
    source: &[usize],
    target: &[usize],
    lengths: &[f64],
    options: GraphOptions,
) -> Result<MetricGraph> {
    let ne = source.len();
    if target.len() != ne {
        return Err(Error::InvalidGraph(format!(
            "source has {ne} entries but target has {}",
            target.len()
        )));
    }
    if ne == 0 {
        return Err(Error::InvalidGraph("a graph needs at least one edge".into()));
    }
    if let Some(&bad) = source.iter().chain(target).find(|&&v| v == 0) {
        return Err(Error::InvalidGraph(format!("vertex id {bad} is not 1-based")));
    }
    for m in 1..ne {
        if (source[m], target[m]) < (source[m - 1], target[m - 1]) {
            return Err(Error::InvalidGraph(format!(
                "edges must be sorted by (source, target): edge {} = ({}, {}) follows ({}, {})",
                m + 1,
                source[m],
                target[m],
                source[m - 1],
                target[m - 1]
            )));
        }
    }
    let nv = *source.iter().chain(target).max().unwrap();
    let mut seen = vec![false; nv];
    for &v in source.iter().chain(target) {
        seen[v - 1] = true;
    }
    if let Some(gap) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidGraph(format!(
            "vertex {} is not an endpoint of any edge",
            gap + 1
        )));
    }

    let lengths = broadcast(lengths, ne, "length")?;
    let weights = broadcast(options.weights.as_deref().unwrap_or(&[1.0]), ne, "weight")?;
    let robin = broadcast(options.robin.as_deref().unwrap_or(&[0.0]), nv, "robin coefficient")?;
    let potentials = match options.potentials {
        Some(p) if p.len() == ne => p,
        Some(p) => {
            return Err(Error::InvalidGraph(format!(
                "{} potentials given for {ne} edges",
                p.len()
            )))
        }
        None => vec![None; ne],
    };

    let edges = (0..ne)
        .map(|m| Edge {
            source: source[m] - 1,
            target: target[m] - 1,
            length: lengths[m],
            weight: weights[m],
            potential: potentials[m].clone(),
        })
        .collect();
    let vertices = robin.iter().map(|&a| VertexCondition::from_coefficient(a)).collect();
    MetricGraph::new(vertices, edges, options.nx.unwrap_or_default(), options.layout)
}

fn broadcast(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(Error::InvalidGraph(format!("{k} {what} values given, expected 1 or {n}"))),
    }
}

impl MetricGraph {
    /// Validates already 0-based tables.
    pub fn new(
        vertices: Vec<VertexCondition>,
        edges: Vec<Edge>,
        nx: Nx,
        layout: Option<Layout>,
    ) -> Result<Self> {
        for (m, e) in edges.iter().enumerate() {
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} has non-positive length {}",
                    m + 1,
                    e.length
                )));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} has non-positive weight {}",
                    m + 1,
                    e.weight
                )));
            }
            if e.source >= vertices.len() || e.target >= vertices.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge {} references a vertex outside 1..={}",
                    m + 1,
                    vertices.len()
                )));
            }
        }
        for (n, v) in vertices.iter().enumerate() {
            if let VertexCondition::RobinKirchhoff { alpha } = v {
                if !alpha.is_finite() {
                    return Err(Error::InvalidGraph(format!(
                        "vertex {} has non-finite Robin coefficient",
                        n + 1
                    )));
                }
            }
        }
        match &nx {
            Nx::Scalar(v) if !(*v >= 1.0 && v.is_finite()) => {
                return Err(Error::InvalidGraph(format!("nx must be at least 1, got {v}")));
            }
            Nx::PerEdge(v) if v.len() != edges.len() => {
                return Err(Error::InvalidGraph(format!(
                    "{} nx values given for {} edges",
                    v.len(),
                    edges.len()
                )));
            }
            Nx::PerEdge(v) if v.iter().any(|&k| k < 2) => {
                return Err(Error::InvalidGraph("per-edge nx must be at least 2".into()));
            }
            _ => {}
        }
        let mut g = Self {
            vertices,
            edges,
            nx,
            layout: None,
            incidence: Vec::new(),
        };
        g.rebuild_incidence();
        if g.incidence.iter().any(|v| v.is_empty()) {
            let n = g.incidence.iter().position(|v| v.is_empty()).unwrap();
            return Err(Error::InvalidGraph(format!(
                "vertex {} is not an endpoint of any edge",
                n + 1
            )));
        }
        if let Some(l) = layout {
            g = g.with_layout(l)?;
        }
        Ok(g)
    }

    fn rebuild_incidence(&mut self) {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (m, e) in self.edges.iter().enumerate() {
            inc[e.source].push((m, End::Source));
            inc[e.target].push((m, End::Target));
        }
        for v in &mut inc {
            v.sort();
        }
        self.incidence = inc;
    }

    /// Restores derived tables after deserialization.
    pub fn revalidate(self) -> Result<Self> {
        Self::new(self.vertices, self.edges, self.nx, self.layout)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexCondition] {
        &self.vertices
    }

    pub fn vertex(&self, n: usize) -> &VertexCondition {
        &self.vertices[n]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, m: usize) -> &Edge {
        &self.edges[m]
    }

    pub fn nx(&self) -> &Nx {
        &self.nx
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn weighted_length(&self) -> f64 {
        self.edges.iter().map(|e| e.weight * e.length).sum()
    }

    pub fn has_potential(&self) -> bool {
        self.edges.iter().any(|e| e.potential.is_some())
    }

    /// True when the Laplacian has constants in its kernel.
    pub fn is_neumann_kirchhoff(&self) -> bool {
        !self.has_potential()
            && self
                .vertices
                .iter()
                .all(|v| matches!(v, VertexCondition::RobinKirchhoff { alpha } if *alpha == 0.0))
    }

    /// Number of incident edge ends, self-loops counted twice.
    pub fn degree(&self, n: usize) -> Result<usize> {
        Ok(self.incident_ends(n)?.len())
    }

    /// Incident ends sorted by `(edge, end)` with the source end first.
    pub fn incident_ends(&self, n: usize) -> Result<&[(usize, End)]> {
        self.incidence
            .get(n)
            .map(|v| v.as_slice())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "vertex index {n} out of range for {} vertices",
                    self.vertices.len()
                ))
            })
    }

    pub fn vertex_at(&self, m: usize, end: End) -> usize {
        match end {
            End::Source => self.edges[m].source,
            End::Target => self.edges[m].target,
        }
    }

    pub fn with_nx(mut self, nx: Nx) -> Result<Self> {
        self.nx = nx;
        Self::new(self.vertices, self.edges, self.nx, self.layout)
    }

    pub fn with_vertex_conditions(mut self, v: Vec<VertexCondition>) -> Result<Self> {
        if v.len() != self.vertices.len() {
            return Err(Error::InvalidGraph(format!(
                "{} vertex conditions given for {} vertices",
                v.len(),
                self.vertices.len()
            )));
        }
        self.vertices = v;
        Self::new(self.vertices, self.edges, self.nx, self.layout)
    }

    pub fn with_weights(mut self, w: &[f64]) -> Result<Self> {
        let w = broadcast(w, self.edges.len(), "weight")?;
        for (e, w) in self.edges.iter_mut().zip(w) {
            e.weight = w;
        }
        Self::new(self.vertices, self.edges, self.nx, self.layout)
    }

    pub fn with_potentials(mut self, p: Vec<Option<Expr>>) -> Result<Self> {
        if p.len() != self.edges.len() {
            return Err(Error::InvalidGraph(format!(
                "{} potentials given for {} edges",
                p.len(),
                self.edges.len()
            )));
        }
        for (e, p) in self.edges.iter_mut().zip(p) {
            e.potential = p;
        }
        Self::new(self.vertices, self.edges, self.nx, self.layout)
    }

    /// Attaches plotting coordinates after checking them against the edges.
    pub fn with_layout(mut self, layout: Layout) -> Result<Self> {
        layout.validate(&self)?;
        self.layout = Some(layout);
        Ok(self)
    }

    /// 1-based `(source, target)` pairs, as accepted by [`build_graph`].
    pub fn edge_table(&self) -> (Vec<usize>, Vec<usize>) {
        self.edges.iter().map(|e| (e.source + 1, e.target + 1)).unzip()
    }

    /// Robin coefficients with the `NaN` Dirichlet convention.
    pub fn robin_coefficients(&self) -> Vec<f64> {
        self.vertices
            .iter()
            .map(|v| match v {
                VertexCondition::Dirichlet => f64::NAN,
                VertexCondition::RobinKirchhoff { alpha } => *alpha,
            })
            .collect()
    }
}
