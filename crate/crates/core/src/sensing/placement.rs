use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigma_min, CMatrix};
use crate::spectral::SpectralBasis;

/// Metered bus set chosen to keep the low-frequency modes observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPlan {
    /// Buses in selection order.
    pub buses: Vec<usize>,
    /// `σ_min` of the selected rows of `U_K`.
    pub sigma_min: f64,
    /// Number of low-frequency modes `|K|`.
    pub k: usize,
    /// Score after each greedy step.
    #[serde(default, skip_serializing)]
    pub step_scores: Vec<f64>,
}

impl SensorPlan {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: SensorPlan = serde_json::from_str(text)?;
        let mut seen = std::collections::HashSet::new();
        if !plan.buses.iter().all(|b| seen.insert(*b)) || plan.buses.len() < plan.k {
            return Err(Error::InvalidArgument(
                "sensor plan has duplicate buses or too few buses".into(),
            ));
        }
        Ok(plan)
    }

    /// Buses in ascending order.
    pub fn sorted_buses(&self) -> Vec<usize> {
        let mut b = self.buses.clone();
        b.sort_unstable();
        b
    }
}

/// Placement score of a row selection of `U_K`.
///
/// With fewer rows than modes the selection is rank deficient; it is then scored
/// by the smallest of its `rows.len()` singular values over all `k` columns.
pub fn placement_score(u_k: &CMatrix, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let sub = CMatrix::from_fn(rows.len(), u_k.ncols(), |i, j| u_k[(rows[i], j)]);
    sigma_min(&sub)
}

/// Greedy forward selection of `m` buses maximizing `σ_min(F_A U_K)`, where
/// `U_K` holds the eigenvectors of the `k` lowest graph frequencies.
pub fn greedy_sensor_placement(basis: &SpectralBasis, k: usize, m: usize) -> Result<SensorPlan> {
    let n = basis.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "{k} modes requested on {n} nodes"
        )));
    }
    if m < k || m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot place {m} sensors for {k} modes on {n} nodes"
        )));
    }
    let u_k = basis.lowest(k);
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for bus in 0..n {
            if chosen.contains(&bus) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(bus);
            let score = placement_score(&u_k, &trial);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((bus, score));
            }
        }
        let (bus, score) = best.expect("fewer sensors than buses");
        chosen.push(bus);
        scores.push(score);
    }
    Ok(SensorPlan {
        sigma_min: *scores.last().unwrap(),
        buses: chosen,
        k,
        step_scores: scores,
    })
}
