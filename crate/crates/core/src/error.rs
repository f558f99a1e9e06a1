use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular matrix in {0}")]
    Singular(String),

    #[error(
        "the Laplacian has a nullspace (all vertices Neumann-Kirchhoff with zero Robin \
         coefficient); pin a vertex with a Dirichlet or Robin condition or project the data"
    )]
    Nullspace,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("codimension-two degeneracy: {0}")]
    Codimension2(String),

    #[error("time stepping became unstable at step {step} (max modulus {value:e})")]
    Unstable { step: usize, value: f64 },

    #[error("invalid expression `{expr}`: {reason}")]
    Expression { expr: String, reason: String },

    #[error("corrupt or incompatible data at {path}: {reason}")]
    Storage { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
