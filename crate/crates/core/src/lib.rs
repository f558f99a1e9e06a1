//! Discretization and solvers for differential equations on metric graphs.
//!
//! Functions on a graph are stored as one column: every edge contributes its
//! extended-grid samples in edge order. Operators are non-square, with vertex
//! conditions appended as constraint rows so that the assembled systems are
//! square.

pub mod continuation;
pub mod discretization;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod functionals;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod stationary;

pub use discretization::{discretize, OperatorBundle, Scheme};
pub use error::{Error, Result};
pub use expr::Expr;
pub use graph::{build_graph, from_template, End, GraphOptions, MetricGraph, Nx, VertexCondition};
pub use scalar::Scalar;
