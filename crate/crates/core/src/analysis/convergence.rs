use rayon::prelude::*;
use serde::Serialize;

use super::{AnalysisError, TheoremConstants};
use crate::dynamics::{simulate, Scenario, Trajectory};
use crate::flatnorm::signed_distance;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: u32,
    pub sup_distance: f64,
    pub ratio: Option<f64>,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scenario_digest: String,
    pub grid: Vec<f64>,
    pub constants: TheoremConstants,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rows whose distance exceeds the bound by more than `slack` (relative).
    pub fn violations(&self, slack: f64) -> Vec<&ConvergenceRow> {
        self.rows
            .iter()
            .filter(|r| r.sup_distance > r.bound * (1.0 + slack))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>4}  {:>14}  {:>8}  {:>14}\n",
            "k", "sup_distance", "ratio", "bound"
        );
        for r in &self.rows {
            let ratio = r.ratio.map_or("-".to_string(), |v| format!("{v:.4}"));
            out.push_str(&format!(
                "{:>4}  {:>14.6e}  {:>8}  {:>14.6e}\n",
                r.k, r.sup_distance, ratio, r.bound
            ));
        }
        out
    }
}

/// Sup over `grid` of the signed distance between two trajectories with
/// identical snapshot times.
pub fn sup_distance(
    a: &Trajectory,
    b: &Trajectory,
    params: crate::flatnorm::NormParams,
) -> Result<f64, AnalysisError> {
    let dists: Vec<f64> = a
        .snapshots
        .par_iter()
        .zip(&b.snapshots)
        .map(|(x, y)| signed_distance(&x.state, &y.state, params))
        .collect::<Result<_, _>>()?;
    Ok(dists.into_iter().fold(0.0, f64::max))
}

/// Compares levels `k` and `k + 1` for `k` in `k_min..k_max` on `grid`.
pub fn convergence_table(
    s: &Scenario,
    k_min: u32,
    k_max: u32,
    grid: &[f64],
) -> Result<ConvergenceReport, AnalysisError> {
    if k_min < 1 || k_min >= k_max {
        return Err(AnalysisError::InvalidArgument(format!(
            "need 1 <= k_min < k_max, got {k_min}..{k_max}"
        )));
    }
    let base = s.with_snapshots(grid.to_vec())?;
    let constants = TheoremConstants::from_scenario(&base);
    let floor = constants.min_level();
    if k_min < floor {
        return Err(AnalysisError::InvalidArgument(format!(
            "k_min must be at least {floor} so that L dt <= 1"
        )));
    }
    let trajectories: Vec<Trajectory> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| Ok(simulate(&base.with_level(k)?)?))
        .collect::<Result<_, AnalysisError>>()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (i, k) in (k_min..k_max).enumerate() {
        let sup = sup_distance(&trajectories[i], &trajectories[i + 1], base.params())?;
        let ratio = rows
            .last()
            .and_then(|prev| (prev.sup_distance > 0.0).then(|| sup / prev.sup_distance));
        rows.push(ConvergenceRow {
            k,
            sup_distance: sup,
            ratio,
            bound: constants.cauchy_bound(k),
        });
    }
    Ok(ConvergenceReport {
        scenario_digest: base.digest(),
        grid: trajectories[0].snapshots.iter().map(|s| s.t).collect(),
        constants,
        rows,
    })
}
