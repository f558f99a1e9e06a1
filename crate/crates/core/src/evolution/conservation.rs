use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::discretization::OperatorBundle;
use crate::error::Result;
use crate::functionals::{energy_nls, integral, mass, momentum};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    Mass,
    /// Energy of power-`σ` NLS.
    Energy { sigma: f64 },
    /// Momentum with optional per-edge orientation signs.
    Momentum { signs: Option<Vec<f64>> },
    /// Real part of `∫ u`.
    TotalHeat,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mass => "mass",
            Self::Energy { .. } => "energy",
            Self::Momentum { .. } => "momentum",
            Self::TotalHeat => "total_heat",
        }
    }

    pub fn eval<S: Scalar>(&self, b: &OperatorBundle, u: &[S]) -> Result<f64> {
        match self {
            Self::Mass => mass(b, u),
            Self::Energy { sigma } => energy_nls(b, u, *sigma),
            Self::Momentum { signs } => momentum(b, u, signs.as_deref()),
            Self::TotalHeat => Ok(integral(b, u)?.to_c64().re),
        }
    }
}

/// Functional values per stored sample and their drift from `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationTable {
    pub times: Vec<f64>,
    pub quantities: Vec<Quantity>,
    /// `values[q][k]`: quantity `q` at sample `k`.
    pub values: Vec<Vec<f64>>,
}

impl ConservationTable {
    /// `(Q(t) − Q(0)) / |Q(0)|`, or the absolute change when `Q(0) = 0`.
    pub fn drift(&self, q: usize) -> Vec<f64> {
        let v = &self.values[q];
        let q0 = v.first().copied().unwrap_or(0.0);
        let s = if q0 != 0.0 { q0.abs() } else { 1.0 };
        v.iter().map(|x| (x - q0) / s).collect()
    }

    pub fn max_drift(&self, q: usize) -> f64 {
        self.drift(q).iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Rows of `t, Q_1, drift_1, Q_2, drift_2, …`.
    pub fn rows(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut header = vec!["t".to_string()];
        for q in &self.quantities {
            header.push(q.name().to_string());
            header.push(format!("{}_drift", q.name()));
        }
        let drifts: Vec<Vec<f64>> = (0..self.quantities.len()).map(|q| self.drift(q)).collect();
        let rows = (0..self.times.len())
            .map(|k| {
                let mut r = vec![self.times[k]];
                for q in 0..self.quantities.len() {
                    r.push(self.values[q][k]);
                    r.push(drifts[q][k]);
                }
                r
            })
            .collect();
        (header, rows)
    }
}

pub fn conservation_trace<S: Scalar>(
    b: &OperatorBundle,
    traj: &Trajectory<S>,
    quantities: &[Quantity],
) -> Result<ConservationTable> {
    let values = quantities
        .iter()
        .map(|q| traj.states.iter().map(|u| q.eval(b, u)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ConservationTable {
        times: traj.times.clone(),
        quantities: quantities.to_vec(),
        values,
    })
}
