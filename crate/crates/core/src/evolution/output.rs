use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ConservationTable, Trajectory};
use crate::continuation::layout_hash;
use crate::discretization::{write_state_csv, OperatorBundle};
use crate::error::Result;
use crate::io;
use crate::scalar::Scalar;

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scheme: String,
    pub mu: Complex64,
    pub tau: f64,
    pub t_final: f64,
    pub n_skip: usize,
    pub graph_hash: String,
    pub seed: Option<u64>,
    pub steps: usize,
    pub factorizations: usize,
    pub warnings: Vec<String>,
}

/// Writes `times.csv`, `state_XXXX.csv`, `conservation.csv` and `run.json`
/// into `dir`. `meta.graph_hash` is filled in from the bundle.
pub fn write_run<S: Scalar>(
    dir: &Path,
    bundle: &OperatorBundle,
    traj: &Trajectory<S>,
    table: &ConservationTable,
    mut meta: RunMeta,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_column(&dir.join("times.csv"), &traj.times)?;
    for (k, u) in traj.states.iter().enumerate() {
        write_state_csv(bundle, u, &dir.join(format!("state_{:04}.csv", k + 1)))?;
    }
    let (header, rows) = table.rows();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_table(&dir.join("conservation.csv"), &header, &rows)?;
    meta.graph_hash = layout_hash(bundle);
    io::write_json(&dir.join("run.json"), &meta)
}
