//! Shift-invert solver for `A v = λ B v` with a singular right-hand matrix.
//!
//! Infinite eigenvalues of the pencil map to the zero eigenvalues of
//! `(A − σB)⁻¹B` and are discarded, so only finite eigenvalues are returned.

use faer::Mat;
use num_complex::Complex64;

use super::{DenseLu, SparseLu, SparseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigOptions {
    pub shift: f64,
    /// Above this size the sparse subspace iteration replaces the dense
    /// reduction.
    pub dense_limit: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            shift: 1e-2,
            dense_limit: 1500,
            max_iterations: 500,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigPair {
    /// Eigenvalue; the imaginary part is zeroed when below
    /// `1e-8·(1 + |λ|)`.
    pub value: Complex64,
    /// Unit Euclidean norm, largest component real and positive.
    pub vector: Vec<Complex64>,
    /// `‖A v − λ B v‖∞`.
    pub residual: f64,
}

impl EigPair {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// The `m` finite eigenvalues of `(A, B)` nearest zero, computed by
/// shift-invert about `opts.shift`.
pub fn generalized_eigs(
    a: &SparseMatrix,
    b: &SparseMatrix,
    m: usize,
    opts: &EigOptions,
) -> Result<Vec<EigPair>> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(Error::Dimension {
            context: "generalized eigenproblem",
            expected: n,
            got: b.nrows(),
        });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    // rank(B) bounds the number of finite eigenvalues
    let finite_bound = (0..n).filter(|&i| !b.row(i).0.is_empty()).count();
    let m = m.min(finite_bound);
    let sigma = opts.shift;

    let raw = if n <= opts.dense_limit {
        dense_shift_invert(a, b, sigma)?
    } else {
        subspace_iteration(a, b, m, sigma, opts)?
    };

    let mut pairs: Vec<EigPair> = raw
        .into_iter()
        .map(|(mu, v)| finish_pair(a, b, sigma + 1.0 / mu, v))
        .collect();
    pairs.sort_by(|p, q| {
        let key = |e: &EigPair| (e.value.norm(), e.value.re, e.value.im);
        key(p).partial_cmp(&key(q)).unwrap_or(std::cmp::Ordering::Equal)
    });
    pairs.truncate(m);

    for p in &mut pairs {
        let scale = residual_scale(a, b, p);
        if p.residual > opts.tolerance * scale {
            refine(a, b, p, opts.tolerance)?;
        }
    }
    Ok(pairs)
}

fn dense_shift_invert(
    a: &SparseMatrix,
    b: &SparseMatrix,
    sigma: f64,
) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let n = a.nrows();
    let shifted = SparseMatrix::linear_combination(&[(1.0, a), (-sigma, b)]).to_dense();
    let lu = DenseLu::new(&shifted);
    if lu.is_singular() {
        return Err(Error::Singular(format!(
            "shift {sigma} coincides with an eigenvalue"
        )));
    }
    let c = lu.solve_mat(&b.to_dense())?;
    let evd = c
        .eigen()
        .map_err(|e| Error::InvalidArgument(format!("dense eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let max_mu = (0..n).fold(0.0_f64, |m, i| m.max(s[i].norm()));
    Ok((0..n)
        .filter(|&i| s[i].norm() > 1e-12 * max_mu)
        .map(|i| (s[i], (0..n).map(|r| u[(r, i)]).collect()))
        .collect())
}

fn subspace_iteration(
    a: &SparseMatrix,
    b: &SparseMatrix,
    m: usize,
    sigma: f64,
    opts: &EigOptions,
) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let n = a.nrows();
    let lu = SparseLu::<f64>::new(&[(1.0, a), (-sigma, b)])?;
    let p = (2 * m + 10).min(n);
    let apply = |x: &[f64]| -> Result<Vec<f64>> { lu.solve(&b.mul_vec(x)) };

    // deterministic, non-degenerate start block
    let mut q = Mat::<f64>::from_fn(n, p, |i, j| {
        ((i as f64 + 1.0) * (j as f64 + 1.0) * 0.618_033_988_75).sin() + 1e-3 * j as f64
    });
    q = q.qr().compute_thin_Q();

    for _ in 0..opts.max_iterations {
        let mut y = Mat::<f64>::zeros(n, p);
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|i| q[(i, j)]).collect();
            let cy = apply(&col)?;
            for i in 0..n {
                y[(i, j)] = cy[i];
            }
        }
        let h = q.transpose() * &y;
        let evd = h
            .eigen()
            .map_err(|e| Error::InvalidArgument(format!("Ritz eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let w = evd.U();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| s[j].norm().partial_cmp(&s[i].norm()).unwrap());

        let qc = q.as_ref();
        let yc = y.as_ref();
        let mut converged = true;
        let mut out = Vec::with_capacity(m);
        for &k in order.iter().take(m) {
            let mu = s[k];
            let ritz: Vec<Complex64> = (0..n)
                .map(|i| (0..p).fold(Complex64::new(0.0, 0.0), |acc, j| acc + w[(j, k)] * qc[(i, j)]))
                .collect();
            let cy: Vec<Complex64> = (0..n)
                .map(|i| (0..p).fold(Complex64::new(0.0, 0.0), |acc, j| acc + w[(j, k)] * yc[(i, j)]))
                .collect();
            let res = ritz
                .iter()
                .zip(&cy)
                .fold(0.0_f64, |r, (v, c)| r.max((c - mu * v).norm()));
            if res > 1e-11 * mu.norm() {
                converged = false;
            }
            out.push((mu, ritz));
        }
        if converged {
            return Ok(out);
        }
        q = y.qr().compute_thin_Q();
    }
    Err(Error::NoConvergence {
        what: "subspace iteration",
        iterations: opts.max_iterations,
        residual: f64::NAN,
    })
}

fn finish_pair(a: &SparseMatrix, b: &SparseMatrix, mut value: Complex64, mut v: Vec<Complex64>) -> EigPair {
    if value.im.abs() < 1e-8 * (1.0 + value.norm()) {
        value.im = 0.0;
    }
    normalize(&mut v);
    if value.im == 0.0 {
        for z in &mut v {
            z.im = 0.0;
        }
        normalize(&mut v);
    }
    let residual = pair_residual(a, b, value, &v);
    EigPair {
        value,
        vector: v,
        residual,
    }
}

/// Scales to unit norm with the largest-modulus entry real and positive.
fn normalize(v: &mut [Complex64]) {
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let phase = v[imax].conj() / v[imax].norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

fn pair_residual(a: &SparseMatrix, b: &SparseMatrix, value: Complex64, v: &[Complex64]) -> f64 {
    let av = a.mul_vec(v);
    let bv = b.mul_vec(v);
    av.iter()
        .zip(&bv)
        .fold(0.0_f64, |r, (x, y)| r.max((x - value * y).norm()))
}

fn residual_scale(a: &SparseMatrix, b: &SparseMatrix, p: &EigPair) -> f64 {
    let av = crate::scalar::max_abs(&a.mul_vec(&p.vector));
    let bv = crate::scalar::max_abs(&b.mul_vec(&p.vector));
    let vmax = crate::scalar::max_abs(&p.vector);
    av + p.value.norm() * bv + 1e-5 * row_norm(a) * vmax
}

fn row_norm(a: &SparseMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A few steps of inverse iteration about the current eigenvalue.
fn refine(a: &SparseMatrix, b: &SparseMatrix, p: &mut EigPair, tol: f64) -> Result<()> {
    let n = a.nrows();
    for _ in 0..4 {
        let shifted = super::dense_combination(
            &[(Complex64::new(1.0, 0.0), a), (-p.value * (1.0 + 1e-10), b)],
            n,
            n,
        );
        let lu = DenseLu::new(&shifted);
        let rhs = b.mul_vec(&p.vector);
        let mut x = match lu.solve(&rhs) {
            Ok(x) => x,
            Err(_) => break,
        };
        normalize(&mut x);
        let av = a.mul_vec(&x);
        let bv = b.mul_vec(&x);
        let num: Complex64 = bv.iter().zip(&av).map(|(u, w)| u.conj() * w).sum();
        let den: Complex64 = bv.iter().map(|u| u.norm_sqr()).sum::<f64>().into();
        let value = num / den;
        *p = finish_pair(a, b, value, x);
        if p.residual <= tol * residual_scale(a, b, p) {
            return Ok(());
        }
    }
    if p.residual <= tol * residual_scale(a, b, p) {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            what: "eigenpair refinement",
            iterations: 4,
            residual: p.residual,
        })
    }
}
