//! Weighted integrals, norms and the conserved quantities of NLS.

use crate::discretization::OperatorBundle;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `Σ_m w_m ∫ u_m dx`.
pub fn integral<S: Scalar>(b: &OperatorBundle, u: &[S]) -> Result<S> {
    b.check_len(u.len(), "integral")?;
    let q = &b.grid().weights;
    let mut s = S::zero_value();
    for i in 0..u.len() {
        if q[i] != 0.0 {
            s += u[i] * S::from_f64(q[i] * b.point_weights[i]);
        }
    }
    Ok(s)
}

fn weighted_sum(b: &OperatorBundle, f: impl Fn(usize) -> f64) -> f64 {
    let q = &b.grid().weights;
    (0..q.len())
        .filter(|&i| q[i] != 0.0)
        .map(|i| q[i] * b.point_weights[i] * f(i))
        .sum()
}

/// `(Σ_m w_m ∫ |u_m|^p)^{1/p}`.
pub fn norm_lp<S: Scalar>(b: &OperatorBundle, u: &[S], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent must be at least 1, got {p}")));
    }
    b.check_len(u.len(), "norm_lp")?;
    let s = if p == 2.0 {
        weighted_sum(b, |i| u[i].modulus_sq())
    } else {
        weighted_sum(b, |i| u[i].modulus().powf(p))
    };
    Ok(s.powf(1.0 / p))
}

/// Squared L² norm.
pub fn mass<S: Scalar>(b: &OperatorBundle, u: &[S]) -> Result<f64> {
    b.check_len(u.len(), "mass")?;
    Ok(weighted_sum(b, |i| u[i].modulus_sq()))
}

/// `Σ_m w_m ∫ conj(u_m) v_m`, conjugate-linear in `u`.
pub fn inner_product<S: Scalar>(b: &OperatorBundle, u: &[S], v: &[S]) -> Result<S> {
    b.check_len(u.len(), "inner_product")?;
    b.check_len(v.len(), "inner_product")?;
    let q = &b.grid().weights;
    let mut s = S::zero_value();
    for i in 0..u.len() {
        if q[i] != 0.0 {
            s += u[i].conjugate() * v[i] * S::from_f64(q[i] * b.point_weights[i]);
        }
    }
    Ok(s)
}

/// Total heat `∫ u` of a real state.
pub fn total_heat(b: &OperatorBundle, u: &[f64]) -> Result<f64> {
    integral(b, u)
}

/// Energy of power-`σ` NLS:
/// `‖u'‖² − ‖u‖_{2σ+2}^{2σ+2} + Σ w∫V|u|² + Σ_n α_n |u(v_n)|²`.
pub fn energy_nls<S: Scalar>(b: &OperatorBundle, u: &[S], sigma: f64) -> Result<f64> {
    b.check_len(u.len(), "energy_nls")?;
    let du = b.derivative(u);
    let p = sigma + 1.0;
    let bulk = weighted_sum(b, |i| {
        let a = u[i].modulus_sq();
        du[i].modulus_sq() - a.powf(p) + b.potential[i] * a
    });
    Ok(bulk + vertex_term(b, u))
}

/// Energy for a general local nonlinearity with real antiderivative
/// `F(|u|²)` replacing the power term.
pub fn energy_with<S: Scalar>(
    b: &OperatorBundle,
    u: &[S],
    potential_term: impl Fn(f64) -> f64,
) -> Result<f64> {
    b.check_len(u.len(), "energy_with")?;
    let du = b.derivative(u);
    let bulk = weighted_sum(b, |i| {
        let a = u[i].modulus_sq();
        du[i].modulus_sq() - potential_term(a) + b.potential[i] * a
    });
    Ok(bulk + vertex_term(b, u))
}

fn vertex_term<S: Scalar>(b: &OperatorBundle, u: &[S]) -> f64 {
    let vals = b.vertex_values.mul_vec(u);
    b.graph()
        .vertices()
        .iter()
        .zip(&vals)
        .map(|(c, v)| c.alpha() * v.modulus_sq())
        .sum()
}

/// `Im Σ_m s_m w_m ∫ conj(u_m) u_m'`, with optional orientation signs `s_m`
/// (default all `+1`).
pub fn momentum<S: Scalar>(b: &OperatorBundle, u: &[S], signs: Option<&[f64]>) -> Result<f64> {
    b.check_len(u.len(), "momentum")?;
    let ne = b.graph().num_edges();
    if let Some(s) = signs {
        if s.len() != ne {
            return Err(Error::Dimension {
                context: "momentum signs",
                expected: ne,
                got: s.len(),
            });
        }
    }
    let du = b.derivative(u);
    let q = &b.grid().weights;
    let mut total = 0.0;
    for m in 0..ne {
        let sign = signs.map_or(1.0, |s| s[m]);
        let w = b.graph().edge(m).weight;
        let mut e = 0.0;
        for i in b.edge_range(m) {
            e += q[i] * (u[i].conjugate() * du[i]).to_c64().im;
        }
        total += sign * w * e;
    }
    Ok(total)
}

/// Inner product plus `β Λ₁ Λ₂`, the metric for arclength continuation.
pub fn beta_metric(b: &OperatorBundle, u1: &[f64], l1: f64, u2: &[f64], l2: f64, beta: f64) -> Result<f64> {
    Ok(inner_product(b, u1, u2)? + beta * l1 * l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{discretize, Scheme};
    use crate::graph::{build_graph, GraphOptions, Nx};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn edge(len: f64, nx: Nx, scheme: Scheme) -> OperatorBundle {
        let g = build_graph(
            &[1],
            &[2],
            &[len],
            GraphOptions {
                nx: Some(nx),
                ..Default::default()
            },
        )
        .unwrap();
        discretize(&g, scheme).unwrap()
    }

    #[test]
    fn weighted_length() {
        let g = build_graph(
            &[1, 1, 1, 2, 2],
            &[1, 1, 2, 2, 3],
            &[PI, 2.0 * PI, 1.0, 2.0 * PI, 2.0],
            GraphOptions {
                weights: Some(vec![1.0, 1.0, 2.0, 1.0, 1.0]),
                ..Default::default()
            },
        )
        .unwrap();
        for s in [Scheme::Uniform, Scheme::Chebyshev] {
            let b = discretize(&g, s).unwrap();
            let one = vec![1.0; b.n_ext()];
            assert!((integral(&b, &one).unwrap() - (5.0 * PI + 4.0)).abs() < 1e-12);
            assert_eq!(integral(&b, &vec![0.0; b.n_ext()]).unwrap(), 0.0);
        }
    }

    #[test]
    fn sine_integral() {
        let b = edge(PI, Nx::Scalar(20.0), Scheme::Uniform);
        let u = b.sample(|_, x| x.sin());
        assert!((integral(&b, &u).unwrap() - 2.0).abs() < 1e-3);
        let b = edge(PI, Nx::Scalar(20.0), Scheme::Chebyshev);
        let u = b.sample(|_, x| x.sin());
        assert!((integral(&b, &u).unwrap() - 2.0).abs() < 1e-10);
        let v = b.sample(|_, x| x.cos());
        assert!(inner_product(&b, &u, &v).unwrap().abs() < 1e-10);
    }

    #[test]
    fn soliton_quantities() {
        let b = edge(40.0, Nx::PerEdge(vec![300]), Scheme::Chebyshev);
        let u = b.sample(|_, x| 1.0 / (x - 20.0).cosh());
        assert!((mass(&b, &u).unwrap() - 2.0).abs() < 1e-9);
        assert!((energy_nls(&b, &u, 1.0).unwrap() + 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(momentum(&b, &u, None).unwrap(), 0.0);
        let v = 0.8;
        let z: Vec<Complex64> = b.sample(|_, x| {
            Complex64::from_polar(1.0 / (x - 20.0).cosh(), -v * x / 2.0)
        });
        assert!((momentum(&b, &z, None).unwrap() + v).abs() < 1e-4);
    }

    #[test]
    fn constants() {
        let b = edge(1.0, Nx::Scalar(10.0), Scheme::Uniform);
        let c = 1.7;
        let u = vec![c; b.n_ext()];
        for p in [1.0, 2.0, 3.5] {
            assert!((norm_lp(&b, &u, p).unwrap() - c).abs() < 1e-12);
        }
        assert!(norm_lp(&b, &u, 0.5).is_err());
        let z = vec![Complex64::new(0.3, -1.1); b.n_ext()];
        assert!(momentum(&b, &z, None).unwrap().abs() < 1e-12);
    }

    #[test]
    fn ring_constant_energy() {
        let g = build_graph(&[1], &[1], &[2.0 * PI], GraphOptions::default()).unwrap();
        let b = discretize(&g, Scheme::Uniform).unwrap();
        let c: f64 = 0.6;
        let u = vec![c; b.n_ext()];
        let e = energy_nls(&b, &u, 1.0).unwrap();
        assert!((e + c.powi(4) * 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn beta_metric_arithmetic() {
        let b = edge(1.0, Nx::Scalar(10.0), Scheme::Uniform);
        let z = vec![0.0; b.n_ext()];
        assert!((beta_metric(&b, &z, 2.0, &z, 2.0, 0.1).unwrap() - 0.4).abs() < 1e-15);
    }
}
