//! Source functionals `h[mu]`.

use serde::{Deserialize, Serialize};

use super::velocity::{bump, BUMP_LIP};
use super::DynamicsError;
use crate::flatnorm::{signed_norm, NormParams};
use crate::measure::{distance, SignedMeasure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Zero,
    /// `h[mu] = sigma` for a fixed measure.
    Fixed {
        measure: SignedMeasure,
    },
    /// `h[mu] = clamp(gain * <phi, mu>, -1, 1) * sigma`, where
    /// `phi(x) = bump(|x - center| / radius)` probes the state near `center`.
    LipschitzMap {
        measure: SignedMeasure,
        center: Vec<f64>,
        radius: f64,
        gain: f64,
    },
}

/// A source functional with certified mass bound `mass_p`, Lipschitz
/// constant `lip_q` (with respect to the signed norm) and support radius
/// `radius_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    spec: SourceSpec,
    dim: usize,
    pub mass_p: f64,
    pub lip_q: f64,
    pub radius_r: f64,
}

impl SourceModel {
    pub fn new(spec: SourceSpec, dim: usize, params: NormParams) -> Result<Self, DynamicsError> {
        let check_dim = |m: &SignedMeasure| {
            if m.dim() == dim {
                Ok(())
            } else {
                Err(DynamicsError::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                })
            }
        };
        let (mass_p, lip_q, radius_r) = match &spec {
            SourceSpec::Zero => (0.0, 0.0, 0.0),
            SourceSpec::Fixed { measure } => {
                check_dim(measure)?;
                (measure.mass(), 0.0, measure.support_radius())
            }
            SourceSpec::LipschitzMap {
                measure,
                center,
                radius,
                gain,
            } => {
                check_dim(measure)?;
                if center.len() != dim || center.iter().any(|c| !c.is_finite()) {
                    return Err(DynamicsError::InvalidModel(
                        "source center must be a finite point of the measure dimension".into(),
                    ));
                }
                if !(radius.is_finite() && *radius > 0.0 && gain.is_finite()) {
                    return Err(DynamicsError::InvalidModel(
                        "source probe needs a positive radius and a finite gain".into(),
                    ));
                }
                let probe = f64::max(1.0 / params.a, BUMP_LIP / (radius * params.b));
                let q = gain.abs() * probe * signed_norm(measure, params)?;
                (measure.mass(), q, measure.support_radius())
            }
        };
        Ok(SourceModel {
            spec,
            dim,
            mass_p,
            lip_q,
            radius_r,
        })
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.spec, SourceSpec::Zero)
    }

    pub fn eval(&self, mu: &SignedMeasure) -> Result<SignedMeasure, DynamicsError> {
        if mu.dim() != self.dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim,
                found: mu.dim(),
            });
        }
        Ok(match &self.spec {
            SourceSpec::Zero => SignedMeasure::empty(self.dim),
            SourceSpec::Fixed { measure } => measure.clone(),
            SourceSpec::LipschitzMap {
                measure,
                center,
                radius,
                gain,
            } => {
                let probe = mu.integrate(|x| bump(distance(x, center) / radius));
                measure.scale((gain * probe).clamp(-1.0, 1.0))
            }
        })
    }
}
