//! Pseudo-arclength continuation of stationary branches with fold and
//! branch-point detection.

mod branch;
mod storage;

pub use branch::{
    continue_branch, continue_from_branch_point, continue_from_eig, continue_from_end, continue_from_solution,
    corrector, tangent_at, Continuer,
};
pub use storage::{
    bifurcation_diagram, continue_from_branch_point_dir, continue_from_eig_dir, continue_from_end_dir,
    continue_from_saved, layout_hash, load_branch, save_branch, save_eigenfunctions, Axis, DiagramRun,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::SparseMatrix;
use crate::stationary::NlsProblem;

/// A family `F(u, Λ) = 0` to be continued.
pub trait ContinuationSystem {
    fn dim(&self) -> usize;
    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>>;
    /// `∂F/∂u`.
    fn jacobian(&self, u: &[f64], lambda: f64) -> Result<SparseMatrix>;
    /// `∂F/∂Λ`.
    fn lambda_derivative(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>>;
    /// Weights `W` of the inner product `⟨u, v⟩ = Σ W_i u_i v_i`.
    fn metric_weights(&self) -> Vec<f64>;
    fn mass(&self, u: &[f64]) -> f64 {
        let w = self.metric_weights();
        u.iter().zip(&w).map(|(x, w)| w * x * x).sum()
    }
    fn energy(&self, _u: &[f64]) -> f64 {
        0.0
    }
}

impl ContinuationSystem for NlsProblem<'_> {
    fn dim(&self) -> usize {
        self.bundle.n_ext()
    }

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        NlsProblem::residual(self, u, lambda)
    }

    fn jacobian(&self, u: &[f64], lambda: f64) -> Result<SparseMatrix> {
        NlsProblem::jacobian(self, u, lambda)
    }

    fn lambda_derivative(&self, u: &[f64], _lambda: f64) -> Result<Vec<f64>> {
        Ok(NlsProblem::lambda_derivative(self, u))
    }

    fn metric_weights(&self) -> Vec<f64> {
        let b = self.bundle;
        b.grid().weights.iter().zip(&b.point_weights).map(|(q, w)| q * w).collect()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        NlsProblem::energy(self, u).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    /// Largest accepted turn between consecutive tangents, degrees.
    #[serde(alias = "maxTheta")]
    pub max_theta: f64,
    #[serde(alias = "minNormDelta")]
    pub min_norm_delta: f64,
    pub beta: f64,
    #[serde(alias = "NThresh")]
    pub n_thresh: f64,
    #[serde(alias = "LambdaThresh")]
    pub lambda_thresh: f64,
    #[serde(alias = "maxPoints")]
    pub max_points: usize,
    #[serde(alias = "saveFlag")]
    pub save_flag: bool,
    #[serde(alias = "plotFlag")]
    pub plot_flag: bool,
    #[serde(alias = "verboseFlag")]
    pub verbose_flag: bool,
    /// Initial pseudo-arclength step.
    pub ds: f64,
    #[serde(alias = "newtonTol")]
    pub newton_tol: f64,
    #[serde(alias = "newtonMaxIter")]
    pub newton_max_iter: usize,
    pub grow: f64,
    #[serde(alias = "maxStepFactor")]
    pub max_step_factor: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            max_theta: 4.0,
            min_norm_delta: 1e-3,
            beta: 0.1,
            n_thresh: 4.0,
            lambda_thresh: -1.0,
            max_points: 999,
            save_flag: true,
            plot_flag: true,
            verbose_flag: true,
            ds: 0.05,
            newton_tol: 1e-10,
            newton_max_iter: 20,
            grow: 1.3,
            max_step_factor: 8.0,
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error::InvalidArgument as bad;
        if !(self.max_theta > 0.0 && self.max_theta < 90.0) {
            return Err(bad(format!("maxTheta must lie in (0, 90), got {}", self.max_theta)));
        }
        if !(self.min_norm_delta > 0.0) {
            return Err(bad("minNormDelta must be positive".into()));
        }
        if !(self.beta > 0.0) {
            return Err(bad("beta must be positive".into()));
        }
        if self.max_points < 2 {
            return Err(bad("maxPoints must be at least 2".into()));
        }
        if !(self.ds > 0.0) {
            return Err(bad("initial step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(i8)]
pub enum BifType {
    Regular = 0,
    BranchPoint = 1,
    Fold = -1,
}

impl BifType {
    pub fn code(self) -> i8 {
        self as i8
    }

    pub fn from_code(c: i8) -> Option<Self> {
        match c {
            0 => Some(Self::Regular),
            1 => Some(Self::BranchPoint),
            -1 => Some(Self::Fold),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub psi: Vec<f64>,
    pub lambda: f64,
    pub mass: f64,
    pub energy: f64,
    pub bif_type: BifType,
    /// Unit tangent in the β-metric.
    pub tangent: Vec<f64>,
    pub tangent_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Provenance {
    Eigenfunction { index: usize, amplitude: f64 },
    Saved { path: String },
    BranchPoint { parent: String, index: usize, sign: i8 },
    End { parent: String },
    Seed,
}

/// A branch point located on a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Bifurcation {
    /// Stored point nearest to the bifurcation.
    pub index: usize,
    pub lambda: f64,
    pub psi: Vec<f64>,
    /// Null vector of `∂F/∂u`, unit in the metric.
    pub null_vector: Vec<f64>,
    /// `Ψ* + ε φ` and `Ψ* − ε φ`.
    pub perturbations: [Vec<f64>; 2],
    pub epsilon: f64,
    /// Pseudo-arclength brackets visited during bisection, outermost first.
    pub brackets: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxPoints,
    MassThreshold,
    LambdaThreshold,
    StepTooSmall,
    Codimension2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub provenance: Provenance,
    pub options: ContinuationOptions,
    pub bifurcations: Vec<Bifurcation>,
    pub termination: Termination,
    /// Human-readable events in order.
    pub log: Vec<String>,
}

impl Branch {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mass).collect()
    }

    pub fn count(&self, t: BifType) -> usize {
        self.points.iter().filter(|p| p.bif_type == t).count()
    }
}

/// Starting point for a branch: a guess and a tangent direction.
#[derive(Debug, Clone)]
pub struct Seed {
    pub u: Vec<f64>,
    pub lambda: f64,
    pub direction: Vec<f64>,
    pub direction_lambda: f64,
}
