//! Checks of the a-priori estimates along simulated trajectories.

use rayon::prelude::*;
use serde::Serialize;

use super::{AnalysisError, TheoremConstants};
use crate::dynamics::{partial_step, run_steps, Scenario, Trajectory};
use crate::flatnorm::signed_distance;

/// Largest excess of mass and support radius over their bounds
/// `|mu_0| + P t` and `R' + t M` (nonpositive when the bounds hold).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub mass_excess: f64,
    pub support_excess: f64,
}

pub fn growth_check(s: &Scenario, traj: &Trajectory) -> GrowthCheck {
    let c = TheoremConstants::from_scenario(s);
    let r0 = c.initial_radius(s);
    let mut out = GrowthCheck {
        mass_excess: f64::NEG_INFINITY,
        support_excess: f64::NEG_INFINITY,
    };
    for snap in &traj.snapshots {
        let mass_bound = c.initial_mass + c.mass_p * snap.t;
        let support_bound = r0 + snap.t * c.bound_m;
        out.mass_excess = out.mass_excess.max(snap.state.mass() - mass_bound);
        out.support_excess = out
            .support_excess
            .max(snap.state.support_radius() - support_bound);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzRow {
    pub t: f64,
    pub tau: f64,
    pub distance: f64,
    pub bound: f64,
}

/// `||mu_{t+tau} - mu_t||` against `C2_lip(t, tau) tau` plus the grid slack,
/// over all pairs of snapshots of `traj`.
pub fn time_lipschitz_rows(
    s: &Scenario,
    traj: &Trajectory,
) -> Result<Vec<LipschitzRow>, AnalysisError> {
    let c = TheoremConstants::from_scenario(s);
    let slack = c.time_lipschitz_slack(s.time_step());
    let snaps = &traj.snapshots;
    let pairs: Vec<(usize, usize)> = (0..snaps.len())
        .flat_map(|i| (i + 1..snaps.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let (t, tau) = (snaps[i].t, snaps[j].t - snaps[i].t);
            let d = signed_distance(&snaps[j].state, &snaps[i].state, s.params())?;
            Ok(LipschitzRow {
                t,
                tau,
                distance: d,
                bound: c.time_lipschitz(t, tau) * tau + slack,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingReport {
    pub t: f64,
    pub reference_level: u32,
    pub taus: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log tau`.
    pub slope: f64,
}

/// Residual of one splitting step of length `tau` started at time `t`,
/// measured against a fine trajectory with step `T 2^-reference_level`:
/// `||mu_{t+tau} - (Phi_tau^{v[mu_t]} # mu_t + tau h[mu_t])||`.
pub fn splitting_residuals(
    s: &Scenario,
    t: f64,
    taus: &[f64],
    reference_level: u32,
) -> Result<SplittingReport, AnalysisError> {
    if taus.len() < 2 || taus.iter().any(|tau| !tau.is_finite() || *tau <= 0.0) {
        return Err(AnalysisError::InvalidArgument(
            "need at least two positive step lengths".into(),
        ));
    }
    let dt = s.horizon() * 0.5f64.powi(reference_level as i32);
    let mut times: Vec<f64> = taus.iter().map(|tau| t + tau).collect();
    times.push(t);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let last = *times.last().unwrap();
    let steps = (last / dt).ceil() as u64;
    let snaps = run_steps(s, s.initial(), dt, steps, &times)?;
    let state_at = |time: f64| {
        snaps
            .iter()
            .find(|sn| sn.t == time)
            .map(|sn| &sn.state)
            .expect("requested time")
    };
    let start = state_at(t);
    let residuals: Vec<f64> = taus
        .par_iter()
        .map(|&tau| {
            let one_step = partial_step(
                start,
                tau,
                s.velocity(),
                s.source(),
                s.params(),
                s.file().substeps,
            )?;
            Ok(signed_distance(state_at(t + tau), &one_step, s.params())?)
        })
        .collect::<Result<_, AnalysisError>>()?;
    let slope = log_log_slope(taus, &residuals);
    Ok(SplittingReport {
        t,
        reference_level,
        taus: taus.to_vec(),
        residuals,
        slope,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
