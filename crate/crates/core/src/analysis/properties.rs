//! Seeded randomized checks of the metric and norm identities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::random::{random_dim, random_signed, trial_rng};
use super::AnalysisError;
use crate::flatnorm::{
    dual_value, gw_distance, signed_composites, signed_distance, signed_norm, w1_classic,
    FlatNormError, NormParams,
};
use crate::measure::{distance, linear_combine, SignedMeasure};

const MAX_ATOMS: usize = 12;

type Check = fn(&mut ChaCha8Rng, NormParams) -> Result<f64, FlatNormError>;

/// Name, tolerance on the violation, and the per-trial check returning its
/// violation (0 when the property holds exactly).
const PROPERTIES: &[(&str, f64, Check)] = &[
    ("symmetry", 0.0, symmetry),
    ("identity_of_indiscernibles", 1e-9, identity),
    ("triangle_inequality", 1e-9, triangle),
    ("homogeneity", 1e-9, homogeneity),
    ("norm_subadditivity", 1e-9, norm_subadditivity),
    ("cancellation_invariance", 1e-9, cancellation),
    ("distance_subadditivity", 1e-9, distance_subadditivity),
    ("decomposition_independence", 1e-9, decomposition),
    ("parameter_scaling", 1e-9, parameter_scaling),
    ("dilation_identity", 1e-9, dilation),
    ("norm_equivalence", 1e-9, norm_equivalence),
    ("mass_gap_bound", 1e-9, mass_gap),
    ("strong_duality", 1e-7, duality),
    ("classical_comparison", 1e-9, classical_comparison),
    ("two_point_closed_form", 1e-12, two_point),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyRecord {
    pub property: String,
    pub trials: u64,
    pub max_violation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PropertyReport {
    pub records: Vec<PropertyRecord>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn to_text(&self) -> String {
        let width = self
            .records
            .iter()
            .map(|r| r.property.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let mut out = format!(
            "{:<width$}  {:>7}  {:>13}  {}\n",
            "property", "trials", "max_violation", "pass"
        );
        for r in &self.records {
            out.push_str(&format!(
                "{:<width$}  {:>7}  {:>13.6e}  {}\n",
                r.property, r.trials, r.max_violation, r.pass
            ));
        }
        out
    }
}

pub fn property_names() -> impl Iterator<Item = &'static str> {
    PROPERTIES.iter().map(|p| p.0)
}

/// Runs every property for `trials` seeded trials. Solver errors count as an
/// infinite violation rather than aborting the suite.
pub fn property_suite(
    seed: u64,
    trials: u64,
    p: NormParams,
) -> Result<PropertyReport, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    let p = p.validated()?;
    let records = PROPERTIES
        .iter()
        .map(|&(name, tol, check)| {
            let worst = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, name, t);
                    match check(&mut rng, p) {
                        Ok(v) if v.is_nan() => f64::INFINITY,
                        Ok(v) => v.max(0.0),
                        Err(_) => f64::INFINITY,
                    }
                })
                .reduce(|| 0.0, f64::max);
            PropertyRecord {
                property: name.to_string(),
                trials,
                max_violation: worst,
                pass: worst <= tol,
            }
        })
        .collect();
    Ok(PropertyReport { records })
}

fn triple(rng: &mut ChaCha8Rng) -> (SignedMeasure, SignedMeasure, SignedMeasure) {
    let d = random_dim(rng);
    (
        random_signed(rng, d, MAX_ATOMS),
        random_signed(rng, d, MAX_ATOMS),
        random_signed(rng, d, MAX_ATOMS),
    )
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1.0)
}

fn sum(x: &SignedMeasure, y: &SignedMeasure) -> SignedMeasure {
    linear_combine(1.0, x, 1.0, y).expect("same dimension")
}

fn symmetry(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, _) = triple(rng);
    let (x, y) = (signed_distance(&mu, &nu, p)?, signed_distance(&nu, &mu, p)?);
    Ok(if x.to_bits() == y.to_bits() {
        0.0
    } else {
        (x - y).abs().max(f64::MIN_POSITIVE)
    })
}

fn identity(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, _) = triple(rng);
    let self_dist = signed_distance(&mu, &mu, p)?;
    let d = signed_distance(&mu, &nu, p)?;
    let separated = if mu != nu && d <= 0.0 { 1.0 } else { 0.0 };
    Ok(self_dist.abs().max(separated))
}

fn triangle(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, eta) = triple(rng);
    Ok(signed_distance(&mu, &eta, p)?
        - signed_distance(&mu, &nu, p)?
        - signed_distance(&nu, &eta, p)?)
}

fn homogeneity(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, _, _) = triple(rng);
    let lambda: f64 = rng.random_range(-3.0..=3.0);
    Ok(rel(
        signed_norm(&mu.scale(lambda), p)?,
        lambda.abs() * signed_norm(&mu, p)?,
    ))
}

fn norm_subadditivity(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, eta, _) = triple(rng);
    Ok(signed_norm(&sum(&mu, &eta), p)? - signed_norm(&mu, p)? - signed_norm(&eta, p)?)
}

fn cancellation(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, eta) = triple(rng);
    let shifted = signed_distance(&sum(&mu, &eta), &sum(&nu, &eta), p)?;
    Ok((shifted - signed_distance(&mu, &nu, p)?).abs())
}

fn distance_subadditivity(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu1, nu1, mu2) = triple(rng);
    let nu2 = random_signed(rng, mu1.dim(), MAX_ATOMS);
    let joint = signed_distance(&sum(&mu1, &mu2), &sum(&nu1, &nu2), p)?;
    Ok(joint - signed_distance(&mu1, &nu1, p)? - signed_distance(&mu2, &nu2, p)?)
}

/// The value from the Jordan composites equals the value after adding the
/// same atom `c delta_z` to both sides.
fn decomposition(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, _) = triple(rng);
    let (plus, minus) = signed_composites(&mu, &nu)?;
    let z: Vec<f64> = (0..mu.dim())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let common = SignedMeasure::dirac(&z, rng.random_range(0.01..=2.0))?;
    let padded = gw_distance(&sum(&plus, &common), &sum(&minus, &common), p)?.0;
    Ok((padded - signed_distance(&mu, &nu, p)?).abs())
}

fn parameter_scaling(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, _) = triple(rng);
    let lambda: f64 = rng.random_range(0.1..=10.0);
    let scaled = NormParams::new(lambda * p.a, lambda * p.b)?;
    Ok(rel(
        signed_distance(&mu, &nu, scaled)?,
        lambda * signed_distance(&mu, &nu, p)?,
    ))
}

fn dilation(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, _) = triple(rng);
    let lambda: f64 = rng.random_range(0.1..=10.0);
    let dilate = |m: &SignedMeasure| {
        m.push_forward(|x, out| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = lambda * xi;
            }
        })
    };
    let lhs = signed_distance(&dilate(&mu)?, &dilate(&nu)?, p)?;
    let rhs = signed_distance(&mu, &nu, NormParams::new(p.a, lambda * p.b)?)?;
    Ok(rel(lhs, rhs))
}

fn norm_equivalence(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, _, _) = triple(rng);
    let unit = signed_norm(&mu, NormParams::new(1.0, 1.0)?)?;
    let value = signed_norm(&mu, p)?;
    let below = p.a.min(p.b) * unit - value;
    let above = value - p.a.max(p.b) * unit;
    Ok(below.max(above))
}

fn mass_gap(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, _, _) = triple(rng);
    let j = mu.jordan();
    Ok(p.a * (j.plus.mass() - j.minus.mass()).abs() - signed_norm(&mu, p)?)
}

fn duality(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let (mu, nu, _) = triple(rng);
    let primal = signed_distance(&mu, &nu, p)?;
    let (dual, _) = dual_value(&mu, &nu, p)?;
    Ok((primal - dual).abs() / primal.max(1.0))
}

/// Positive measures of equal mass: the distance is at most `b W1`.
fn classical_comparison(rng: &mut ChaCha8Rng, p: NormParams) -> Result<f64, FlatNormError> {
    let d = random_dim(rng);
    let mu = random_signed(rng, d, MAX_ATOMS).jordan();
    let nu = random_signed(rng, d, MAX_ATOMS).jordan();
    let pick = |j: crate::measure::JordanPair| if j.plus.is_empty() { j.minus } else { j.plus };
    let (mu, nu) = (pick(mu), pick(nu));
    let nu = nu.scale(mu.total() / nu.total());
    let gw = gw_distance(&mu, &nu, p)?.0;
    let w1 = w1_classic(&mu, &nu)?.0;
    Ok(gw - p.b * w1)
}

/// `||delta_x - delta_y|| = min(2a, b |x - y|)` with random `a, b`.
fn two_point(rng: &mut ChaCha8Rng, _p: NormParams) -> Result<f64, FlatNormError> {
    let d = random_dim(rng);
    let a = rng.random_range(0.1..=10.0);
    let b = rng.random_range(0.1..=10.0);
    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..=5.0)).collect();
    let y: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..=5.0)).collect();
    let q = NormParams::new(a, b)?;
    let value = signed_distance(
        &SignedMeasure::dirac(&x, 1.0)?,
        &SignedMeasure::dirac(&y, 1.0)?,
        q,
    )?;
    Ok((value - (2.0 * a).min(b * distance(&x, &y))).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_rejected() {
        assert!(property_suite(1, 0, NormParams::new(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn suite_passes_and_is_reproducible() {
        let p = NormParams::new(0.7, 1.9).unwrap();
        let first = property_suite(42, 6, p).unwrap();
        assert!(first.all_pass(), "{}", first.to_text());
        assert_eq!(first.records.len(), 15);
        assert_eq!(first.to_json(), property_suite(42, 6, p).unwrap().to_json());
    }
}
