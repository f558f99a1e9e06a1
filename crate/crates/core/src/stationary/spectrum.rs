use num_complex::Complex64;

use crate::discretization::OperatorBundle;
use crate::error::Result;
use crate::functionals::mass;
use crate::linalg::{generalized_eigs, EigOptions};

/// An eigenpair of the discretized Laplacian.
#[derive(Debug, Clone)]
pub struct Mode {
    pub lambda: Complex64,
    /// Unit mass; real up to a global phase when `lambda` is real.
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

impl Mode {
    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }

    pub fn real_vector(&self) -> Vec<f64> {
        self.vector.iter().map(|z| z.re).collect()
    }
}

/// The `m` eigenvalues of `L_VC v = λ P_0 v` of smallest magnitude, sorted by
/// magnitude and then value.
pub fn eigs(b: &OperatorBundle, m: usize, shift: Option<f64>) -> Result<Vec<Mode>> {
    let opts = EigOptions {
        shift: shift.unwrap_or(1e-2),
        ..Default::default()
    };
    let pairs = generalized_eigs(&b.l_vc, &b.p_0, m, &opts)?;
    pairs
        .into_iter()
        .map(|p| {
            let n = mass(b, &p.vector)?.sqrt();
            let s = if n > 0.0 { 1.0 / n } else { 1.0 };
            Ok(Mode {
                lambda: p.value,
                vector: p.vector.iter().map(|z| z * s).collect(),
                residual: p.residual * s,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{discretize, Scheme};
    use crate::graph::{build_graph, GraphOptions};
    use crate::scalar::max_abs;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_interval() {
        let g = build_graph(
            &[1],
            &[2],
            &[PI],
            GraphOptions {
                robin: Some(vec![f64::NAN]),
                ..Default::default()
            },
        )
        .unwrap();
        let b = discretize(&g, Scheme::Uniform).unwrap();
        let modes = eigs(&b, 3, None).unwrap();
        for (j, md) in modes.iter().enumerate() {
            let exact = -(((j + 1) * (j + 1)) as f64);
            assert!(md.is_real());
            assert!((md.lambda.re - exact).abs() < 2e-3 * exact.abs(), "{}", md.lambda);
            assert!(max_abs(&b.m_vc.mul_vec(&md.vector)) < 1e-8);
            assert!((mass(&b, &md.vector).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_null_mode() {
        let g = build_graph(&[1], &[2], &[1.0], GraphOptions::default()).unwrap();
        let b = discretize(&g, Scheme::Uniform).unwrap();
        let m = &eigs(&b, 1, None).unwrap()[0];
        assert!(m.lambda.norm() < 1e-10);
        let v = m.real_vector();
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-10));
    }
}
