use rayon::prelude::*;
use serde::Serialize;

use super::{AnalysisError, TheoremConstants};
use crate::dynamics::{simulate, Scenario};
use crate::flatnorm::signed_distance;
use crate::measure::{linear_combine, SignedMeasure};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DependenceRow {
    pub t: f64,
    pub distance: f64,
    /// `distance / (d0 e^{C1 t})` with the rate without the factor `b`.
    pub ratio_dep: f64,
    /// Same with the rate carrying the factor `b`.
    pub ratio_dep_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DependenceReport {
    pub k: u32,
    pub initial_distance: f64,
    pub c1_dep: f64,
    pub c1_dep_b: f64,
    /// Which rate decides `pass`: the larger of the two.
    pub active: &'static str,
    pub max_ratio_dep: f64,
    pub max_ratio_dep_b: f64,
    pub max_ratio_active: f64,
    pub rows: Vec<DependenceRow>,
}

impl DependenceReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.max_ratio_active <= 1.0 + slack
    }
}

/// Runs the scenario from `mu_0` and from `mu_0 + perturbation` at level `k`
/// and compares the trajectories against `d0 e^{C1 t}` on the scenario's
/// snapshot grid.
pub fn continuous_dependence_check(
    s: &Scenario,
    perturbation: &SignedMeasure,
    k: u32,
) -> Result<DependenceReport, AnalysisError> {
    if perturbation.is_empty() {
        return Err(AnalysisError::InvalidArgument(
            "perturbation must be nonzero".into(),
        ));
    }
    let perturbed = linear_combine(1.0, s.initial(), 1.0, perturbation)?;
    if perturbed == *s.initial() {
        return Err(AnalysisError::InvalidArgument(
            "perturbation vanishes after rounding".into(),
        ));
    }
    // Both runs share one velocity functional, certified for the larger mass.
    let p_mass = s.source().mass_p;
    let cap = s.initial().mass().max(perturbed.mass()) + p_mass * s.horizon();
    let base = s.with_level(k)?;
    let (left, right) = match s.velocity().is_local() {
        true => (base.clone(), base.with_initial(perturbed.clone())?),
        false => {
            let capped = base.with_mass_cap(cap.max(s.velocity().mass_cap()))?;
            let other = capped.with_initial(perturbed.clone())?;
            (capped, other)
        }
    };
    let constants = TheoremConstants::from_scenario(&left);
    let min_mass = s.initial().mass().min(perturbed.mass());
    let c1 = constants.dependence_rate(min_mass, false);
    let c1_b = constants.dependence_rate(min_mass, true);

    let (ta, tb) = rayon::join(|| simulate(&left), || simulate(&right));
    let (ta, tb) = (ta?, tb?);
    let params = s.params();
    let d0 = signed_distance(s.initial(), &perturbed, params)?;
    let rows: Vec<DependenceRow> = ta
        .snapshots
        .par_iter()
        .zip(&tb.snapshots)
        .map(|(x, y)| {
            let d = signed_distance(&x.state, &y.state, params)?;
            Ok(DependenceRow {
                t: x.t,
                distance: d,
                ratio_dep: d / (d0 * (c1 * x.t).exp()),
                ratio_dep_b: d / (d0 * (c1_b * x.t).exp()),
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    let max_dep = rows.iter().map(|r| r.ratio_dep).fold(0.0, f64::max);
    let max_dep_b = rows.iter().map(|r| r.ratio_dep_b).fold(0.0, f64::max);
    let (active, max_active) = if c1_b > c1 {
        ("C1_dep_b", max_dep_b)
    } else {
        ("C1_dep", max_dep)
    };
    Ok(DependenceReport {
        k,
        initial_distance: d0,
        c1_dep: c1,
        c1_dep_b: c1_b,
        active,
        max_ratio_dep: max_dep,
        max_ratio_dep_b: max_dep_b,
        max_ratio_active: max_active,
        rows,
    })
}
