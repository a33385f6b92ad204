//! The dyadic splitting scheme and trajectories.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::flow::{push_through, DEFAULT_SUBSTEPS};
use super::io::Scenario;
use super::source::SourceModel;
use super::velocity::VelocityModel;
use super::DynamicsError;
use crate::flatnorm::NormParams;
use crate::measure::{distance, linear_combine, SignedMeasure};

/// Atoms lighter than this are dropped after every step.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub substeps: usize,
    pub merge_radius: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            substeps: DEFAULT_SUBSTEPS,
            merge_radius: 0.0,
        }
    }
}

/// `Phi_tau^{v[mu]} # mu + tau h[mu]`: the state a time `tau` into a step
/// that started from `mu`.
pub fn partial_step(
    mu: &SignedMeasure,
    tau: f64,
    velocity: &VelocityModel,
    source: &SourceModel,
    params: NormParams,
    substeps: usize,
) -> Result<SignedMeasure, DynamicsError> {
    if params != velocity.params() {
        return Err(DynamicsError::ParamsMismatch);
    }
    let field = velocity.freeze(mu)?;
    let moved = push_through(mu, &field, tau, substeps)?;
    let out = if source.is_zero() || tau == 0.0 {
        moved
    } else {
        linear_combine(1.0, &moved, tau, &source.eval(mu)?)?
    };
    Ok(out.pruned(PRUNE_THRESHOLD))
}

/// One step of the scheme with time step `dt`.
pub fn scheme_step(
    mu: &SignedMeasure,
    dt: f64,
    velocity: &VelocityModel,
    source: &SourceModel,
    params: NormParams,
    options: StepOptions,
) -> Result<SignedMeasure, DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::InvalidScenario(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let next = partial_step(mu, dt, velocity, source, params, options.substeps)?;
    if options.merge_radius > 0.0 {
        merge_nearby(&next, options.merge_radius)
    } else {
        Ok(next)
    }
}

/// Replaces each cluster of atoms within `radius` of a seed atom by one atom
/// at the `|w|`-weighted centroid carrying the summed weight.
#[allow(clippy::needless_range_loop)]
pub fn merge_nearby(mu: &SignedMeasure, radius: f64) -> Result<SignedMeasure, DynamicsError> {
    let d = mu.dim();
    let n = mu.len();
    let mut pos = Vec::with_capacity(n * d);
    let mut w = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    for seed in 0..n {
        if taken[seed] {
            continue;
        }
        let mut centroid = vec![0.0; d];
        let mut abs_total = 0.0;
        let mut total = 0.0;
        for j in seed..n {
            // Atoms are sorted by first coordinate; nothing further can be close.
            if mu.position(j)[0] - mu.position(seed)[0] > radius {
                break;
            }
            if taken[j] || distance(mu.position(seed), mu.position(j)) > radius {
                continue;
            }
            taken[j] = true;
            let wj = mu.weight(j);
            for (c, x) in centroid.iter_mut().zip(mu.position(j)) {
                *c += wj.abs() * x;
            }
            abs_total += wj.abs();
            total += wj;
        }
        for c in centroid.iter_mut() {
            *c /= abs_total;
        }
        pos.extend_from_slice(&centroid);
        w.push(total);
    }
    Ok(SignedMeasure::from_flat(d, pos, w)?.pruned(PRUNE_THRESHOLD))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub state: SignedMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub scenario_digest: String,
    pub level_k: u32,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SignedMeasure {
        &self
            .snapshots
            .last()
            .expect("trajectories start at t = 0")
            .state
    }

    pub fn state_at(&self, t: f64) -> Option<&SignedMeasure> {
        self.snapshots.iter().find(|s| s.t == t).map(|s| &s.state)
    }

    /// One row per atom per snapshot: `t,atom,x0..x{d-1},w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let dim = self.snapshots.first().map_or(1, |s| s.state.dim());
        let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        writeln!(out, "t,atom,{},w", coords.join(","))?;
        for snap in &self.snapshots {
            for (i, (x, w)) in snap.state.atoms().enumerate() {
                write!(out, "{:?},{i}", snap.t)?;
                for c in x {
                    write!(out, ",{c:?}")?;
                }
                writeln!(out, ",{w:?}")?;
            }
        }
        Ok(())
    }
}

/// Runs the scheme from `initial` with step `dt` for `steps` steps and
/// returns the states at `times` (sorted, within `[0, steps * dt]`), using
/// the intra-step formula between grid points.
pub fn run_steps(
    scenario: &Scenario,
    initial: &SignedMeasure,
    dt: f64,
    steps: u64,
    times: &[f64],
) -> Result<Vec<Snapshot>, DynamicsError> {
    let velocity = scenario.velocity();
    let source = scenario.source();
    let params = scenario.params();
    let options = StepOptions {
        substeps: scenario.file().substeps,
        merge_radius: scenario.file().merge_radius,
    };
    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().copied().peekable();
    let mut state = initial.clone();
    for i in 0..=steps {
        let start = i as f64 * dt;
        let end = (i + 1) as f64 * dt;
        while let Some(&t) = pending.peek() {
            if t == start {
                out.push(Snapshot {
                    t,
                    state: state.clone(),
                });
            } else if t < end && i < steps {
                let partial = partial_step(
                    &state,
                    t - start,
                    velocity,
                    source,
                    params,
                    options.substeps,
                )?;
                out.push(Snapshot { t, state: partial });
            } else {
                break;
            }
            pending.next();
        }
        if i == steps || pending.peek().is_none() {
            break;
        }
        state = scheme_step(&state, dt, velocity, source, params, options)?;
    }
    if let Some(t) = pending.next() {
        return Err(DynamicsError::InvalidScenario(format!(
            "time {t} lies beyond the simulated horizon"
        )));
    }
    Ok(out)
}

/// Snapshot times of a scenario: sorted, deduplicated, starting at 0.
fn snapshot_grid(scenario: &Scenario) -> Vec<f64> {
    let mut times = scenario.snapshot_times().to_vec();
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Runs `2^k` steps of size `T 2^-k` and records the requested snapshots.
pub fn simulate(scenario: &Scenario) -> Result<Trajectory, DynamicsError> {
    let steps = 1u64 << scenario.level();
    let dt = scenario.time_step();
    let mut times = snapshot_grid(scenario);
    // The final grid point is reached by the last step, not by dt * steps
    // rounding.
    let horizon = scenario.horizon();
    for t in times.iter_mut() {
        if *t == horizon {
            *t = dt * steps as f64;
        }
    }
    let mut snapshots = run_steps(scenario, scenario.initial(), dt, steps, &times)?;
    for s in snapshots.iter_mut() {
        if s.t == dt * steps as f64 {
            s.t = horizon;
        }
    }
    Ok(Trajectory {
        scenario_digest: scenario.digest(),
        level_k: scenario.level(),
        snapshots,
    })
}
