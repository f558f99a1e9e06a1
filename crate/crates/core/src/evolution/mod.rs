//! Time stepping on the constraint manifold: every step solves a square
//! system whose vertex rows enforce `M_VC ψ = 0`.

mod conservation;
mod output;

pub use conservation::{conservation_trace, ConservationTable, Quantity};
pub use output::{write_run, RunMeta};

use num_complex::Complex64;

use crate::discretization::OperatorBundle;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::SparseLu;
use crate::scalar::{max_abs, Scalar};

/// Growth of `‖ψ‖∞` beyond this factor of the initial value aborts a run.
const BLOW_UP: f64 = 1e6;
/// Initial data violating the vertex conditions by more than this is
/// reported in the trajectory warnings.
const CONSTRAINT_WARN: f64 = 1e-8;

/// Uniform time grid with output decimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub t_final: f64,
    /// Store every `n_skip`-th step; the final step is always stored.
    pub n_skip: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, t_final: f64, n_skip: usize) -> Result<Self> {
        let g = Self { tau, t_final, n_skip };
        g.steps()?;
        Ok(g)
    }

    /// Number of steps; `t_final` must be a whole multiple of `τ`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.tau)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!("final time must be non-negative, got {}", self.t_final)));
        }
        if self.n_skip == 0 {
            return Err(Error::InvalidArgument("nSkip must be at least 1".into()));
        }
        let n = self.t_final / self.tau;
        let r = n.round();
        if (n - r).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "final time {} is not a multiple of the step {}",
                self.t_final, self.tau
            )));
        }
        Ok(r as usize)
    }
}

/// Sampled solution of an evolution run.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<S>>,
    pub steps: usize,
    /// Number of matrix factorizations performed.
    pub factorizations: usize,
    pub warnings: Vec<String>,
}

struct Recorder<S> {
    traj: Trajectory<S>,
    grid: TimeGrid,
    n: usize,
    bound: f64,
}

impl<S: Scalar> Recorder<S> {
    fn new(b: &OperatorBundle, grid: TimeGrid, u0: &[S]) -> Result<Self> {
        b.check_len(u0.len(), "initial state")?;
        let steps = grid.steps()?;
        let mut warnings = Vec::new();
        let v = max_abs(&b.m_vc.mul_vec(u0));
        if v > CONSTRAINT_WARN {
            warnings.push(format!("initial state violates the vertex conditions by {v:.2e}"));
        }
        let init = max_abs(u0);
        Ok(Self {
            traj: Trajectory {
                times: vec![0.0],
                states: vec![u0.to_vec()],
                steps,
                factorizations: 0,
                warnings,
            },
            grid,
            n: steps,
            bound: BLOW_UP * if init > 0.0 { init } else { 1.0 },
        })
    }

    fn push(&mut self, step: usize, u: &[S]) -> Result<()> {
        let m = max_abs(u);
        if !(m <= self.bound) {
            return Err(Error::Unstable { step, value: m });
        }
        if step % self.grid.n_skip == 0 || step == self.n {
            self.traj.times.push(step as f64 * self.grid.tau);
            self.traj.states.push(u.to_vec());
        }
        Ok(())
    }
}

fn axpy<S: Scalar>(y: &mut [S], a: S, x: &[S]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * *x;
    }
}

/// Crank–Nicolson for `ψ_t = μΔψ` with real `μ > 0`:
/// `(P_VC − (τμ/2) L_0) ψ_{n+1} = (P_0 + (τμ/2) L_0) ψ_n`.
pub fn crank_nicolson_heat(b: &OperatorBundle, mu: f64, u0: &[f64], grid: TimeGrid) -> Result<Trajectory<f64>> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {mu}")));
    }
    let mut rec = Recorder::new(b, grid, u0)?;
    let h = 0.5 * grid.tau * mu;
    let lu = SparseLu::new(&[(1.0, &b.p_vc), (-h, &b.l_0)])
        .map_err(|e| Error::Singular(format!("Crank-Nicolson matrix: {e}")))?;
    rec.traj.factorizations = 1;
    let mut u = u0.to_vec();
    for n in 1..=rec.n {
        let mut rhs = b.p_0.mul_vec(&u);
        axpy(&mut rhs, h, &b.l_0.mul_vec(&u));
        u = lu.solve(&rhs)?;
        rec.push(n, &u)?;
    }
    Ok(rec.traj)
}

/// Leapfrog for `ψ_tt = Δψ − g(ψ)` from `ψ(0) = u0`, `ψ_t(0) = v0`:
/// `P_VC ψ_{n+1} = P_0(2ψ_n − ψ_{n−1} − τ² g(ψ_n)) + τ² L_0 ψ_n`, started by
/// the second-order Taylor step.
pub fn leapfrog_klein_gordon(
    b: &OperatorBundle,
    g: impl Fn(f64) -> f64,
    u0: &[f64],
    v0: &[f64],
    grid: TimeGrid,
) -> Result<Trajectory<f64>> {
    b.check_len(v0.len(), "initial velocity")?;
    let mut rec = Recorder::new(b, grid, u0)?;
    let t2 = grid.tau * grid.tau;
    let lu = SparseLu::new(&[(1.0, &b.p_vc)])?;
    rec.traj.factorizations = 1;
    if rec.n == 0 {
        return Ok(rec.traj);
    }
    let mut prev = u0.to_vec();
    let first: Vec<f64> = (0..u0.len()).map(|i| u0[i] + grid.tau * v0[i] - 0.5 * t2 * g(u0[i])).collect();
    let mut rhs = b.p_0.mul_vec(&first);
    axpy(&mut rhs, 0.5 * t2, &b.l_0.mul_vec(u0));
    let mut u = lu.solve(&rhs)?;
    rec.push(1, &u)?;
    for n in 2..=rec.n {
        let w: Vec<f64> = (0..u.len()).map(|i| 2.0 * u[i] - prev[i] - t2 * g(u[i])).collect();
        let mut rhs = b.p_0.mul_vec(&w);
        axpy(&mut rhs, t2, &b.l_0.mul_vec(&u));
        prev = std::mem::replace(&mut u, lu.solve(&rhs)?);
        rec.push(n, &u)?;
    }
    Ok(rec.traj)
}

/// Right-hand side `ψ_t = μΔψ + f(ψ)` for the IMEX schemes.
pub struct EvolutionProblem<'a> {
    pub bundle: &'a OperatorBundle,
    pub mu: Complex64,
    f: Box<dyn Fn(&[Complex64]) -> Vec<Complex64> + 'a>,
}

impl<'a> EvolutionProblem<'a> {
    /// `f ≡ 0`.
    pub fn linear(bundle: &'a OperatorBundle, mu: Complex64) -> Self {
        Self {
            bundle,
            mu,
            f: Box::new(|u| vec![Complex64::new(0.0, 0.0); u.len()]),
        }
    }

    /// Pointwise nonlinearity `f(ψ)(x) = g(ψ(x))`.
    pub fn pointwise(bundle: &'a OperatorBundle, mu: Complex64, g: impl Fn(Complex64) -> Complex64 + 'a) -> Self {
        Self {
            bundle,
            mu,
            f: Box::new(move |u| u.iter().map(|&z| g(z)).collect()),
        }
    }

    /// Pointwise nonlinearity given as an expression in `z`.
    pub fn from_expr(bundle: &'a OperatorBundle, mu: Complex64, f: &Expr) -> Result<Self> {
        let f = f.with_vars(&["z"])?;
        Ok(Self::pointwise(bundle, mu, move |z| f.eval(&[z])))
    }

    /// Cubic NLS `i ψ_t + Δψ + 2|ψ|²ψ = 0`, i.e. `μ = −i`, `f = 2i|ψ|²ψ`.
    pub fn cubic_nls(bundle: &'a OperatorBundle) -> Self {
        Self::pointwise(bundle, Complex64::new(0.0, -1.0), |z| Complex64::new(0.0, -2.0) * z.norm_sqr() * z)
    }

    pub fn f(&self, u: &[Complex64]) -> Vec<Complex64> {
        (self.f)(u)
    }
}

/// Forward-backward Euler:
/// `(P_VC − τμ L_0) ψ_{n+1} = P_0 (ψ_n + τ f(ψ_n))`.
pub fn imex_euler(p: &EvolutionProblem, u0: &[Complex64], grid: TimeGrid) -> Result<Trajectory<Complex64>> {
    let b = p.bundle;
    let mut rec = Recorder::new(b, grid, u0)?;
    let tau = Complex64::from(grid.tau);
    let lu = SparseLu::new(&[(Complex64::from(1.0), &b.p_vc), (-tau * p.mu, &b.l_0)])?;
    rec.traj.factorizations = 1;
    let mut u = u0.to_vec();
    for n in 1..=rec.n {
        let mut w = u.clone();
        axpy(&mut w, tau, &p.f(&u));
        u = lu.solve(&b.p_0.mul_vec(&w))?;
        rec.push(n, &u)?;
    }
    Ok(rec.traj)
}

/// Implicit tableau of ARS(4,4,3); stage 1 is explicit.
const ARS_A: [[f64; 5]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.5, 0.0, 0.0, 0.0],
    [0.0, 1.0 / 6.0, 0.5, 0.0, 0.0],
    [0.0, -0.5, 0.5, 0.5, 0.0],
    [0.0, 1.5, -1.5, 0.5, 0.5],
];
/// Explicit tableau of ARS(4,4,3).
const ARS_AHAT: [[f64; 5]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.0, 0.0, 0.0, 0.0],
    [11.0 / 18.0, 1.0 / 18.0, 0.0, 0.0, 0.0],
    [5.0 / 6.0, -5.0 / 6.0, 0.5, 0.0, 0.0],
    [0.25, 1.75, 0.75, -1.75, 0.0],
];
const ARS_GAMMA: f64 = 0.5;

/// Ascher–Ruuth–Spiteri (4,4,3) IMEX Runge–Kutta: `μΔ` implicit with a
/// single diagonal `γ = 1/2`, `f` explicit. Stiffly accurate, so the last
/// stage is the new state.
pub fn sdirk443(p: &EvolutionProblem, u0: &[Complex64], grid: TimeGrid) -> Result<Trajectory<Complex64>> {
    let b = p.bundle;
    let mut rec = Recorder::new(b, grid, u0)?;
    let tau = Complex64::from(grid.tau);
    let lu = SparseLu::new(&[(Complex64::from(1.0), &b.p_vc), (-tau * p.mu * ARS_GAMMA, &b.l_0)])?;
    rec.traj.factorizations = 1;
    let mut u = u0.to_vec();
    let mut lap: Vec<Vec<Complex64>> = Vec::with_capacity(5);
    let mut nl: Vec<Vec<Complex64>> = Vec::with_capacity(5);
    for n in 1..=rec.n {
        lap.clear();
        nl.clear();
        lap.push(b.l_0.mul_vec(&u));
        nl.push(p.f(&u));
        let mut y = u.clone();
        for i in 1..5 {
            let mut w = u.clone();
            for (j, fj) in nl.iter().enumerate() {
                if ARS_AHAT[i][j] != 0.0 {
                    axpy(&mut w, tau * ARS_AHAT[i][j], fj);
                }
            }
            let mut rhs = b.p_0.mul_vec(&w);
            for (j, lj) in lap.iter().enumerate() {
                if ARS_A[i][j] != 0.0 {
                    axpy(&mut rhs, tau * p.mu * ARS_A[i][j], lj);
                }
            }
            y = lu.solve(&rhs)?;
            if i < 4 {
                lap.push(b.l_0.mul_vec(&y));
                nl.push(p.f(&y));
            }
        }
        u = y;
        rec.push(n, &u)?;
    }
    Ok(rec.traj)
}
