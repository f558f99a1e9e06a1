use crate::discretization::OperatorBundle;
use crate::error::{Error, Result};
use crate::linalg::SparseLu;
use crate::scalar::{max_abs, Scalar};

/// Solves `L_VC ψ = P_0 f + M_NH φ` for edge data `f` and vertex data `φ`.
pub fn solve_poisson<S: Scalar>(b: &OperatorBundle, f: &[S], phi: &[S]) -> Result<Vec<S>> {
    b.check_len(f.len(), "poisson edge data")?;
    let nv = b.graph().num_vertices();
    if phi.len() != nv {
        return Err(Error::Dimension {
            context: "poisson vertex data",
            expected: nv,
            got: phi.len(),
        });
    }
    if b.graph().is_neumann_kirchhoff() {
        return Err(Error::Nullspace);
    }
    let rhs = rhs(b, f, phi);
    let lu = SparseLu::new(&[(S::from_f64(1.0), &b.l_vc)])?;
    let psi = lu.solve(&rhs)?;
    let scale = b.l_vc.max_abs() * max_abs(&psi) + max_abs(&rhs);
    let res = max_abs(&poisson_residual(b, &psi, f, phi));
    if res > 1e-8 * scale.max(1.0) {
        return Err(Error::Singular(format!(
            "Poisson system is numerically singular (residual {res:.3e})"
        )));
    }
    Ok(psi)
}

fn rhs<S: Scalar>(b: &OperatorBundle, f: &[S], phi: &[S]) -> Vec<S> {
    let mut r = b.p_0.mul_vec(f);
    for (v, x) in r.iter_mut().zip(b.m_nh.mul_vec(phi)) {
        *v += x;
    }
    r
}

/// `L_VC ψ − P_0 f − M_NH φ`.
pub fn poisson_residual<S: Scalar>(b: &OperatorBundle, psi: &[S], f: &[S], phi: &[S]) -> Vec<S> {
    let mut r = b.l_vc.mul_vec(psi);
    for (v, x) in r.iter_mut().zip(rhs(b, f, phi)) {
        *v -= x;
    }
    r
}
