//! Generalized Wasserstein distance and norm on signed measures.
//!
//! The primal side moves mass at price `b` per unit distance or removes it at
//! price `a` per unit; [`dual_value`] solves the bounded-Lipschitz dual as an
//! independent check.

mod dual;
mod line;
pub mod simplex;
mod transport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{linear_combine, MeasureError, Point, SignedMeasure};

pub use dual::dual_value;
pub use simplex::SimplexError;
pub use transport::{
    gw_distance_exact, solve_transportation, solve_transportation_exact, w1_classic,
    TransportationPlan, EXACT_MAX_ATOMS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlatNormError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("norm parameters must be finite and positive (a = {a}, b = {b})")]
    InvalidParams { a: f64, b: f64 },
    #[error("negative weight {0} where a positive measure is required")]
    NegativeWeight(f64),
    #[error("masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("exact solver is limited to {0} atoms per side")]
    TooLarge(usize),
    #[error("dual program is unbounded")]
    DualUnbounded,
    #[error(transparent)]
    Solver(#[from] SimplexError),
}

/// Cancellation price `a` and transport price `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub a: f64,
    pub b: f64,
}

impl NormParams {
    pub fn new(a: f64, b: f64) -> Result<Self, FlatNormError> {
        if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
            Ok(NormParams { a, b })
        } else {
            Err(FlatNormError::InvalidParams { a, b })
        }
    }

    /// Validates a value that may have been built field by field.
    pub fn validated(self) -> Result<Self, FlatNormError> {
        NormParams::new(self.a, self.b)
    }
}

/// One entry `pi_ij` of a sparse transport plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportSolution {
    pub flow: Vec<FlowEntry>,
    pub moved_source: SignedMeasure,
    pub moved_target: SignedMeasure,
    pub cancelled_source_mass: f64,
    pub cancelled_target_mass: f64,
    pub value: f64,
}

impl TransportSolution {
    fn zero(mu: &SignedMeasure) -> Self {
        TransportSolution {
            flow: (0..mu.len())
                .map(|i| FlowEntry {
                    source: i,
                    target: i,
                    mass: mu.weight(i),
                })
                .collect(),
            moved_source: mu.clone(),
            moved_target: mu.clone(),
            cancelled_source_mass: 0.0,
            cancelled_target_mass: 0.0,
            value: 0.0,
        }
    }

    fn transposed(self) -> Self {
        let mut flow: Vec<FlowEntry> = self
            .flow
            .into_iter()
            .map(|f| FlowEntry {
                source: f.target,
                target: f.source,
                mass: f.mass,
            })
            .collect();
        flow.sort_by_key(|f| (f.source, f.target));
        TransportSolution {
            flow,
            moved_source: self.moved_target,
            moved_target: self.moved_source,
            cancelled_source_mass: self.cancelled_target_mass,
            cancelled_target_mass: self.cancelled_source_mass,
            value: self.value,
        }
    }

    /// Total transported mass `sum pi_ij`.
    pub fn moved_mass(&self) -> f64 {
        self.flow.iter().fold(0.0, |acc, f| acc + f.mass)
    }

    /// Removed mass on both sides.
    pub fn cancelled_mass(&self) -> f64 {
        self.cancelled_source_mass + self.cancelled_target_mass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualSolution {
    pub sites: Vec<Point>,
    pub potentials: Vec<f64>,
    pub value: f64,
}

/// Which network is used for the primal program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    /// Path graph in one dimension, bipartite graph otherwise.
    #[default]
    Auto,
    /// Complete bipartite graph with dump nodes.
    Bipartite,
    /// Path over sorted sites; one-dimensional inputs only.
    Line,
}

/// Generalized Wasserstein distance between positive measures.
pub fn gw_distance(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
) -> Result<(f64, TransportSolution), FlatNormError> {
    gw_distance_with(mu, nu, p, Engine::Auto)
}

pub fn gw_distance_with(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
    engine: Engine,
) -> Result<(f64, TransportSolution), FlatNormError> {
    let p = p.validated()?;
    mu.check_dim(nu)?;
    transport::require_positive(mu)?;
    transport::require_positive(nu)?;
    if mu == nu {
        return Ok((0.0, TransportSolution::zero(mu)));
    }
    // Solving in a fixed orientation makes the result exactly symmetric.
    if mu.total_cmp(nu).is_gt() {
        let (v, sol) = gw_distance_with(nu, mu, p, engine)?;
        return Ok((v, sol.transposed()));
    }
    let line = match engine {
        Engine::Auto => mu.dim() == 1,
        Engine::Bipartite => false,
        Engine::Line => {
            if mu.dim() != 1 {
                return Err(FlatNormError::InvalidInput(
                    "the line engine needs one-dimensional measures".into(),
                ));
            }
            true
        }
    };
    let sol = if line {
        line::gw_line(mu, nu, p)?
    } else {
        transport::gw_bipartite(mu, nu, p)?
    };
    Ok((sol.value, sol))
}

/// Positive composites `(mu_+ + nu_-, mu_- + nu_+)` of a signed pair.
pub fn signed_composites(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
) -> Result<(SignedMeasure, SignedMeasure), FlatNormError> {
    mu.check_dim(nu)?;
    let jm = mu.jordan();
    let jn = nu.jordan();
    Ok((
        linear_combine(1.0, &jm.plus, 1.0, &jn.minus)?,
        linear_combine(1.0, &jm.minus, 1.0, &jn.plus)?,
    ))
}

/// Signed distance together with the plan between the positive composites.
pub fn signed_solution(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
) -> Result<TransportSolution, FlatNormError> {
    let (plus, minus) = signed_composites(mu, nu)?;
    Ok(gw_distance(&plus, &minus, p)?.1)
}

pub fn signed_distance(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
) -> Result<f64, FlatNormError> {
    Ok(signed_solution(mu, nu, p)?.value)
}

pub fn signed_norm(mu: &SignedMeasure, p: NormParams) -> Result<f64, FlatNormError> {
    signed_distance(mu, &SignedMeasure::empty(mu.dim()), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p11() -> NormParams {
        NormParams::new(1.0, 1.0).unwrap()
    }

    fn d1(x: f64, w: f64) -> SignedMeasure {
        SignedMeasure::dirac(&[x], w).unwrap()
    }

    fn m1(atoms: &[(f64, f64)]) -> SignedMeasure {
        SignedMeasure::from_flat(
            1,
            atoms.iter().map(|a| a.0).collect(),
            atoms.iter().map(|a| a.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn params_must_be_positive() {
        assert!(NormParams::new(0.0, 1.0).is_err());
        assert!(NormParams::new(1.0, -1.0).is_err());
        assert!(NormParams::new(f64::NAN, 1.0).is_err());
        assert!(gw_distance(&d1(0.0, 1.0), &d1(1.0, 1.0), NormParams { a: -1.0, b: 1.0 }).is_err());
    }

    #[test]
    fn two_point_dichotomy() {
        for engine in [Engine::Line, Engine::Bipartite] {
            let (v, sol) = gw_distance_with(&d1(0.0, 1.0), &d1(0.5, 1.0), p11(), engine).unwrap();
            assert_eq!(v, 0.5);
            assert_eq!(sol.cancelled_mass(), 0.0);
            let (v, sol) = gw_distance_with(&d1(0.0, 1.0), &d1(3.0, 1.0), p11(), engine).unwrap();
            assert_eq!(v, 2.0);
            assert_eq!(sol.moved_mass(), 0.0);
        }
    }

    #[test]
    fn distance_to_zero_is_cancellation() {
        let (v, sol) = gw_distance(&d1(0.0, 1.0), &SignedMeasure::empty(1), p11()).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(sol.cancelled_source_mass, 1.0);
        let p = NormParams::new(2.5, 1.0).unwrap();
        let mu = m1(&[(0.0, 1.5), (4.0, 2.0)]);
        assert_eq!(
            gw_distance(&mu, &SignedMeasure::empty(1), p).unwrap().0,
            2.5 * 3.5
        );
        assert_eq!(
            signed_distance(&SignedMeasure::empty(2), &SignedMeasure::empty(2), p).unwrap(),
            0.0
        );
    }

    #[test]
    fn split_mass_to_both_sides() {
        let mu = d1(0.0, 2.0);
        let nu = m1(&[(-1.0, 1.0), (1.0, 1.0)]);
        for engine in [Engine::Line, Engine::Bipartite] {
            let (v, sol) = gw_distance_with(&mu, &nu, p11(), engine).unwrap();
            assert_eq!(v, 2.0);
            assert_eq!(sol.moved_mass() + sol.cancelled_source_mass, 2.0);
        }
        assert_eq!(w1_classic(&mu, &nu).unwrap().0, 2.0);
    }

    #[test]
    fn classic_w1_examples() {
        assert_eq!(w1_classic(&d1(0.0, 1.0), &d1(1.0, 1.0)).unwrap().0, 1.0);
        let mu = m1(&[(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(w1_classic(&mu, &mu).unwrap().0, 0.0);
        assert!(matches!(
            w1_classic(&d1(0.0, 1.0), &d1(0.0, 2.0)),
            Err(FlatNormError::MassMismatch { .. })
        ));
        assert!(w1_classic(&d1(0.0, 1.0), &SignedMeasure::empty(1)).is_err());
    }

    #[test]
    fn signed_examples() {
        let dip = m1(&[(0.0, 1.0), (0.5, -1.0)]);
        assert_eq!(signed_norm(&dip, p11()).unwrap(), 0.5);
        assert_eq!(signed_distance(&dip, &dip, p11()).unwrap(), 0.0);
        let n = 5.0;
        let spike = m1(&[(1.0 / 25.0, n), (-1.0 / 25.0, -n)]);
        assert!((signed_norm(&spike, p11()).unwrap() - 0.4).abs() < 1e-12);
        let far = m1(&[(5.0, 1.0), (5.2, -1.0)]);
        assert!((signed_norm(&far, p11()).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(signed_norm(&SignedMeasure::empty(1), p11()).unwrap(), 0.0);
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(matches!(
            gw_distance(&d1(0.0, -1.0), &d1(0.0, 1.0), p11()),
            Err(FlatNormError::NegativeWeight(_))
        ));
        let two = SignedMeasure::dirac(&[0.0, 0.0], 1.0).unwrap();
        assert!(gw_distance(&d1(0.0, 1.0), &two, p11()).is_err());
    }

    #[test]
    fn plan_accounts_for_value() {
        let mu = m1(&[(0.0, 1.0), (0.3, 2.0), (2.0, 0.5)]);
        let nu = m1(&[(0.1, 1.5), (0.3, 1.0), (5.0, 1.0)]);
        let p = NormParams::new(0.8, 1.7).unwrap();
        for engine in [Engine::Line, Engine::Bipartite] {
            let (v, sol) = gw_distance_with(&mu, &nu, p, engine).unwrap();
            let transport: f64 = sol
                .flow
                .iter()
                .map(|f| f.mass * (mu.position(f.source)[0] - nu.position(f.target)[0]).abs())
                .sum();
            let recon = p.a * sol.cancelled_mass() + p.b * transport;
            assert!(
                (recon - v).abs() <= 1e-9 * v.max(1.0),
                "{engine:?}: {recon} vs {v}"
            );
            assert!((sol.moved_source.mass() - sol.moved_target.mass()).abs() < 1e-12);
            assert!(
                (mu.mass() - sol.moved_source.mass() - sol.cancelled_source_mass).abs() < 1e-12
            );
        }
    }
}
