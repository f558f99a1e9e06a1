//! Standing waves `Ψ'' + ΛΨ + f(Ψ) = 0` with homogeneous vertex conditions.

use serde::{Deserialize, Serialize};

use crate::discretization::OperatorBundle;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{SparseLu, SparseMatrix};
use crate::scalar::max_abs;

/// Real nonlinearity with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `f(z) = Σ c_j z^j`.
    Polynomial { coeffs: Vec<f64> },
    /// `f` given as an expression in `z`, with its symbolic derivative.
    Expression { f: Expr, df: Expr },
}

impl Default for Nonlinearity {
    /// The cubic `f(z) = 2z³`.
    fn default() -> Self {
        Self::power(1.0)
    }
}

impl Nonlinearity {
    /// `(σ+1) z^{2σ+1}` for integer `σ`, else `(σ+1)|z|^{2σ} z`.
    pub fn power(sigma: f64) -> Self {
        if sigma.fract() == 0.0 && sigma >= 0.0 {
            let p = 2 * sigma as usize + 1;
            let mut coeffs = vec![0.0; p + 1];
            coeffs[p] = sigma + 1.0;
            Self::Polynomial { coeffs }
        } else {
            let src = format!("{}*abs(z)^{}*z", sigma + 1.0, 2.0 * sigma);
            Self::expression(Expr::parse(&src, &["z"]).expect("valid power expression"))
                .expect("power nonlinearity vanishes at zero")
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.first().is_some_and(|&c| c != 0.0) {
            return Err(Error::InvalidArgument("nonlinearity must satisfy f(0) = 0".into()));
        }
        Ok(Self::Polynomial { coeffs })
    }

    pub fn expression(f: Expr) -> Result<Self> {
        let f = f.with_vars(&["z"])?;
        if f.eval_real(&[0.0]).abs() > 1e-14 {
            return Err(Error::InvalidArgument(format!("nonlinearity {f} does not vanish at zero")));
        }
        let df = f.derivative(0);
        Ok(Self::Expression { f, df })
    }

    pub fn f(&self, z: f64) -> f64 {
        match self {
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c),
            Self::Expression { f, .. } => f.eval_real(&[z]),
        }
    }

    pub fn df(&self, z: f64) -> f64 {
        match self {
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (j, c)| acc * z + j as f64 * c),
            Self::Expression { df, .. } => df.eval_real(&[z]),
        }
    }

    /// `F(z) = ∫_0^z f`.
    pub fn antiderivative(&self, z: f64) -> f64 {
        match self {
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (j, c)| acc * z + c / (j + 1) as f64)
                * z,
            Self::Expression { f, .. } => gauss_legendre(|t| f.eval_real(&[t]), 0.0, z),
        }
    }
}

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            s += w * f(c + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

/// A discretized stationary problem.
#[derive(Debug, Clone)]
pub struct NlsProblem<'a> {
    pub bundle: &'a OperatorBundle,
    pub nonlinearity: Nonlinearity,
}

impl<'a> NlsProblem<'a> {
    pub fn new(bundle: &'a OperatorBundle) -> Self {
        Self {
            bundle,
            nonlinearity: Nonlinearity::default(),
        }
    }

    pub fn with_nonlinearity(bundle: &'a OperatorBundle, nonlinearity: Nonlinearity) -> Self {
        Self { bundle, nonlinearity }
    }

    pub fn dim(&self) -> usize {
        self.bundle.n_ext()
    }

    /// `L_0 Ψ + P_0(ΛΨ + f(Ψ))` on interior rows, `M_VC Ψ` on constraint rows.
    pub fn residual(&self, psi: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let b = self.bundle;
        b.check_len(psi.len(), "nls residual")?;
        let g: Vec<f64> = psi.iter().map(|&z| lambda * z + self.nonlinearity.f(z)).collect();
        let mut r = b.l_vc.mul_vec(psi);
        for (r, x) in r.iter_mut().zip(b.p_0.mul_vec(&g)) {
            *r += x;
        }
        Ok(r)
    }

    /// `L_VC + P_0 (diag f'(Ψ) + Λ I)`.
    pub fn jacobian(&self, psi: &[f64], lambda: f64) -> Result<SparseMatrix> {
        let b = self.bundle;
        b.check_len(psi.len(), "nls jacobian")?;
        let d: Vec<f64> = psi.iter().map(|&z| self.nonlinearity.df(z) + lambda).collect();
        Ok(SparseMatrix::linear_combination(&[(1.0, &b.l_vc), (1.0, &b.p_0.scale_columns(&d))]))
    }

    /// `∂R/∂Λ = P_0 Ψ`.
    pub fn lambda_derivative(&self, psi: &[f64]) -> Vec<f64> {
        self.bundle.p_0.mul_vec(psi)
    }

    /// `‖Ψ'‖² − 2∫F(Ψ) + ∫VΨ² + Σ α_n Ψ(v_n)²`; for `f = 2z³` this is the
    /// cubic NLS energy.
    pub fn energy(&self, psi: &[f64]) -> Result<f64> {
        crate::functionals::energy_with(self.bundle, psi, |a| {
            2.0 * self.nonlinearity.antiderivative(a.sqrt())
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub psi: Vec<f64>,
    pub iterations: usize,
    /// `‖R‖∞` after each iteration, starting with the initial guess.
    pub trace: Vec<f64>,
}

impl NewtonResult {
    pub fn residual(&self) -> f64 {
        *self.trace.last().unwrap()
    }
}

/// Newton iteration at fixed `Λ`, halving a step once if it increases the
/// residual.
pub fn solve_newton(p: &NlsProblem, psi0: &[f64], lambda: f64, opts: NewtonOptions) -> Result<NewtonResult> {
    let mut psi = psi0.to_vec();
    let mut r = p.residual(&psi, lambda)?;
    let mut rn = max_abs(&r);
    let mut trace = vec![rn];
    for it in 0..opts.max_iter {
        if rn <= opts.tol {
            return Ok(NewtonResult { psi, iterations: it, trace });
        }
        let j = p.jacobian(&psi, lambda)?;
        let delta = SparseLu::new(&[(1.0, &j)])?
            .solve(&r)
            .map_err(|_| Error::Singular("Newton Jacobian is singular, possibly at a bifurcation".into()))?;
        let mut trial: Vec<f64> = psi.iter().zip(&delta).map(|(x, d)| x - d).collect();
        let mut tr = p.residual(&trial, lambda)?;
        if max_abs(&tr) > rn {
            trial = psi.iter().zip(&delta).map(|(x, d)| x - 0.5 * d).collect();
            tr = p.residual(&trial, lambda)?;
        }
        psi = trial;
        r = tr;
        rn = max_abs(&r);
        if !rn.is_finite() {
            break;
        }
        trace.push(rn);
    }
    if rn <= opts.tol {
        return Ok(NewtonResult { psi, iterations: opts.max_iter, trace });
    }
    Err(Error::NoConvergence {
        what: "Newton iteration",
        iterations: opts.max_iter,
        residual: rn,
    })
}
