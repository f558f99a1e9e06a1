//! Secular determinant for plane-wave edge solutions
//! `ψ_m(x) = a_m e^{ikx} + b_m e^{ik(ℓ_m − x)}`.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, VertexCondition};
use crate::linalg::DenseLu;

fn check_supported(g: &MetricGraph) -> Result<()> {
    if g.has_potential() {
        return Err(Error::Unsupported(
            "secular determinant requires zero potential on every edge".into(),
        ));
    }
    if g.edges().iter().any(|e| e.weight != 1.0) {
        return Err(Error::Unsupported("secular determinant requires unit edge weights".into()));
    }
    Ok(())
}

/// `S(k)`: rows in the same vertex order as the discretized conditions,
/// unknowns ordered `(a_1, b_1, a_2, b_2, …)`.
pub fn secular_matrix(g: &MetricGraph, k: f64) -> Result<Mat<Complex64>> {
    Ok(assemble(g, k)?.0)
}

/// The matrix and, per row, the sum of the moduli of all contributions.
fn assemble(g: &MetricGraph, k: f64) -> Result<(Mat<Complex64>, Vec<f64>)> {
    check_supported(g)?;
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("wavenumber must be finite and nonzero, got {k}")));
    }
    let ne = g.num_edges();
    let i = Complex64::i();
    let ik = i * k;
    let phase: Vec<Complex64> = g.edges().iter().map(|e| (ik * e.length).exp()).collect();
    let value = |m: usize, end: End| -> [(usize, Complex64); 2] {
        match end {
            End::Source => [(2 * m, Complex64::new(1.0, 0.0)), (2 * m + 1, phase[m])],
            End::Target => [(2 * m, phase[m]), (2 * m + 1, Complex64::new(1.0, 0.0))],
        }
    };
    let outward = |m: usize, end: End| -> [(usize, Complex64); 2] {
        match end {
            End::Source => [(2 * m, ik), (2 * m + 1, -ik * phase[m])],
            End::Target => [(2 * m, -ik * phase[m]), (2 * m + 1, ik)],
        }
    };
    let mut s = Mat::<Complex64>::zeros(2 * ne, 2 * ne);
    let mut scale = vec![0.0; 2 * ne];
    let mut add = |r: usize, j: usize, v: Complex64| {
        s[(r, j)] += v;
        scale[r] += v.norm();
    };
    let mut row = 0;
    for n in 0..g.num_vertices() {
        let ends = g.incident_ends(n)?;
        let (m1, e1) = ends[0];
        match g.vertex(n) {
            VertexCondition::Dirichlet => {
                for (j, v) in value(m1, e1) {
                    add(row, j, v);
                }
            }
            VertexCondition::RobinKirchhoff { alpha } => {
                for &(m, e) in ends {
                    for (j, v) in outward(m, e) {
                        add(row, j, v);
                    }
                }
                for (j, v) in value(m1, e1) {
                    add(row, j, v * *alpha);
                }
            }
        }
        row += 1;
        for &(m, e) in &ends[1..] {
            for (j, v) in value(m1, e1) {
                add(row, j, v);
            }
            for (j, v) in value(m, e) {
                add(row, j, -v);
            }
            row += 1;
        }
    }
    Ok((s, scale))
}

/// Real-normalized determinant
/// `Σ(k) = det S(k) · e^{−ikL} (−2i)^{−|E|} k^{−F}`, where `L` is the total
/// length and `F` the number of flux rows. This equals the determinant of the
/// same conditions written in the `(cos kx, sin kx)` basis with each flux row
/// divided by `k`.
pub fn secular_det(g: &MetricGraph, k: f64) -> Result<f64> {
    let (s, rows) = assemble(g, k)?;
    let det = DenseLu::new(&s).determinant();
    let flux = g.vertices().iter().filter(|v| !v.is_dirichlet()).count() as i32;
    let norm = (Complex64::new(0.0, -k * g.total_length())).exp()
        * Complex64::new(0.0, -2.0).powi(-(g.num_edges() as i32))
        / k.powi(flux);
    let sigma = det * norm;
    // product of uncancelled row magnitudes sets the rounding scale
    let bound = rows.iter().product::<f64>() * norm.norm();
    if sigma.im.abs() > 1e-10 * bound.max(sigma.norm()) {
        return Err(Error::InvalidArgument(format!(
            "secular determinant is not real at k = {k}: {sigma}"
        )));
    }
    Ok(sigma.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecularZero {
    pub k: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

impl SecularZero {
    pub fn lambda(&self) -> f64 {
        -self.k * self.k
    }
}

/// Zeros of `Σ` on `(0, k_max]`: sign changes refined by bisection, and
/// even-order zeros found as valleys of `|Σ|` below `1e-8·max|Σ|`.
pub fn find_spectrum_secular(g: &MetricGraph, k_max: f64) -> Result<Vec<SecularZero>> {
    if !(k_max > 0.0) {
        return Err(Error::InvalidArgument(format!("k_max must be positive, got {k_max}")));
    }
    check_supported(g)?;
    let n = ((100.0 * k_max * g.total_length() / std::f64::consts::PI).ceil() as usize).max(400);
    let dk = k_max / n as f64;
    let ks: Vec<f64> = (1..=n).map(|i| i as f64 * dk).collect();
    let vals: Vec<f64> = ks.iter().map(|&k| secular_det(g, k)).collect::<Result<_>>()?;
    let vmax = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let f = |k: f64| secular_det(g, k);

    let mut zeros = Vec::new();
    for i in 0..n {
        let (k, v) = (ks[i], vals[i]);
        if v == 0.0 {
            zeros.push(SecularZero { k, multiplicity: 1, residual: 0.0 });
            continue;
        }
        if i + 1 < n && v * vals[i + 1] < 0.0 {
            let (mut lo, mut hi, mut flo) = (k, ks[i + 1], v);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let k = 0.5 * (lo + hi);
            zeros.push(SecularZero { k, multiplicity: 1, residual: f(k)?.abs() });
        } else if i > 0
            && i + 1 < n
            && v.abs() < vals[i - 1].abs()
            && v.abs() < vals[i + 1].abs()
            && vals[i - 1] * v > 0.0
            && vals[i + 1] * v > 0.0
        {
            let k = valley_minimum(&f, ks[i - 1], ks[i + 1])?;
            let r = f(k)?.abs();
            if r < 1e-8 * vmax {
                zeros.push(SecularZero { k, multiplicity: 2, residual: r });
            }
        }
    }
    zeros.sort_by(|a, b| a.k.total_cmp(&b.k));
    zeros.dedup_by(|a, b| (a.k - b.k).abs() < 1e-8);
    Ok(zeros)
}

/// Locates an even-order zero: bisection on the central-difference slope
/// when it brackets, golden section on `|Σ|` otherwise.
fn valley_minimum(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let delta = 1e-5 * (b - a).max(1e-3);
    let slope = |k: f64| -> Result<f64> { Ok((f(k + delta)? - f(k - delta)?) / (2.0 * delta)) };
    let (mut lo, mut hi) = (a, b);
    let (mut slo, shi) = (slope(lo)?, slope(hi)?);
    if slo * shi < 0.0 {
        while hi - lo > 1e-12 * (1.0 + hi.abs()) {
            let mid = 0.5 * (lo + hi);
            let sm = slope(mid)?;
            if (sm < 0.0) == (slo < 0.0) {
                lo = mid;
                slo = sm;
            } else {
                hi = mid;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    golden_section(|k| f(k).map(f64::abs), a, b, 1e-10)
}

fn golden_section(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
