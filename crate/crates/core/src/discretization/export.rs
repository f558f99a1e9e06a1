//! State vectors as `edge,x,re,im` tables and a structural dump of a bundle.

use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::OperatorBundle;
use crate::error::{Error, Result};
use crate::io;
use crate::scalar::Scalar;

/// Writes one row per extended-grid point with the 1-based edge id.
pub fn write_state_csv<S: Scalar>(bundle: &OperatorBundle, u: &[S], path: &Path) -> Result<()> {
    bundle.check_len(u.len(), "write_state_csv")?;
    let mut rows = Vec::with_capacity(u.len());
    for (m, e) in bundle.grid().edges.iter().enumerate() {
        for (k, &x) in e.x_ext.iter().enumerate() {
            let z = u[e.ext.start + k].to_c64();
            rows.push(vec![(m + 1) as f64, x, z.re, z.im]);
        }
    }
    io::write_table(path, &["edge", "x", "re", "im"], &rows)
}

/// Reads a table written by [`write_state_csv`], checking it against the bundle.
pub fn read_state_csv(bundle: &OperatorBundle, path: &Path) -> Result<Vec<Complex64>> {
    let (_, rows) = io::read_table(path)?;
    bundle.check_len(rows.len(), "read_state_csv")?;
    let x = bundle.grid().x_ext();
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let tol = 1e-12 * (1.0 + x[i].abs());
        if r.len() != 4 || (r[1] - x[i]).abs() > tol {
            return Err(Error::Storage {
                path: path.display().to_string(),
                reason: format!("row {} does not match the grid", i + 1),
            });
        }
        out.push(Complex64::new(r[2], r[3]));
    }
    Ok(out)
}

/// Shapes and nonzero counts of the operator family.
pub fn structure_summary(b: &OperatorBundle) -> Value {
    let m = |a: &crate::linalg::SparseMatrix| json!({"rows": a.nrows(), "cols": a.ncols(), "nnz": a.nnz()});
    json!({
        "scheme": b.scheme(),
        "n_ext": b.n_ext(),
        "n_int": b.n_int(),
        "edges": b.grid().edges.iter().map(|e| json!({"ext": [e.ext.start, e.ext.end], "int": [e.int.start, e.int.end]})).collect::<Vec<_>>(),
        "L_int": m(&b.l_int),
        "P_int": m(&b.p_int),
        "M_VC": m(&b.m_vc),
        "M_NH": m(&b.m_nh),
        "L_VC": m(&b.l_vc),
        "P_VC": m(&b.p_vc),
        "D": m(&b.d),
    })
}
