//! Scenario files and validated scenarios.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::flow::DEFAULT_SUBSTEPS;
use super::source::{SourceModel, SourceSpec};
use super::velocity::{VelocityModel, VelocitySpec};
use super::DynamicsError;
use crate::flatnorm::NormParams;
use crate::measure::SignedMeasure;

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

fn is_default_substeps(n: &usize) -> bool {
    *n == DEFAULT_SUBSTEPS
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// On-disk description of a simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub initial: SignedMeasure,
    pub velocity: VelocitySpec,
    pub source: SourceSpec,
    pub norm: NormParams,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub k: u32,
    pub snapshots: Vec<f64>,
    /// Radius for merging nearby atoms after each step; 0 disables merging.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub merge_radius: f64,
    /// RK4 substeps per flow evaluation for kernel velocities.
    #[serde(
        default = "default_substeps",
        skip_serializing_if = "is_default_substeps"
    )]
    pub substeps: usize,
}

/// Largest refinement level accepted.
pub const MAX_LEVEL: u32 = 24;

/// A validated scenario with certified models.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    file: ScenarioFile,
    velocity: VelocityModel,
    source: SourceModel,
}

impl Scenario {
    pub fn new(file: ScenarioFile) -> Result<Self, DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::InvalidScenario(msg));
        let params = file.norm.validated()?;
        if !(file.horizon.is_finite() && file.horizon > 0.0) {
            return bad(format!("T must be positive, got {}", file.horizon));
        }
        if file.k < 1 || file.k > MAX_LEVEL {
            return bad(format!("k must lie in 1..={MAX_LEVEL}, got {}", file.k));
        }
        if let Some(t) = file
            .snapshots
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0 && **t <= file.horizon))
        {
            return bad(format!(
                "snapshot time {t} lies outside [0, {}]",
                file.horizon
            ));
        }
        if !(file.merge_radius.is_finite() && file.merge_radius >= 0.0) {
            return bad("merge_radius must be finite and nonnegative".into());
        }
        if file.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        let dim = file.initial.dim();
        let source = SourceModel::new(file.source.clone(), dim, params)?;
        let default_cap = file.initial.mass() + source.mass_p * file.horizon;
        let velocity = VelocityModel::new(file.velocity.clone(), dim, params, default_cap)?;
        Ok(Scenario {
            file,
            velocity,
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, DynamicsError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de)
            .map_err(|e| DynamicsError::InvalidScenario(e.to_string()))?;
        Scenario::new(file)
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn initial(&self) -> &SignedMeasure {
        &self.file.initial
    }

    pub fn velocity(&self) -> &VelocityModel {
        &self.velocity
    }

    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    pub fn params(&self) -> NormParams {
        self.file.norm
    }

    pub fn horizon(&self) -> f64 {
        self.file.horizon
    }

    pub fn level(&self) -> u32 {
        self.file.k
    }

    pub fn snapshot_times(&self) -> &[f64] {
        &self.file.snapshots
    }

    /// Time step `T 2^-k`.
    pub fn time_step(&self) -> f64 {
        self.file.horizon * 0.5f64.powi(self.file.k as i32)
    }

    pub fn with_level(&self, k: u32) -> Result<Self, DynamicsError> {
        let mut file = self.file.clone();
        file.k = k;
        Scenario::new(file)
    }

    pub fn with_snapshots(&self, times: Vec<f64>) -> Result<Self, DynamicsError> {
        let mut file = self.file.clone();
        file.snapshots = times;
        Scenario::new(file)
    }

    pub fn with_initial(&self, initial: SignedMeasure) -> Result<Self, DynamicsError> {
        let mut file = self.file.clone();
        file.initial = initial;
        Scenario::new(file)
    }

    /// Same scenario with the kernel velocity certified up to `cap`.
    pub fn with_mass_cap(&self, cap: f64) -> Result<Self, DynamicsError> {
        let mut file = self.file.clone();
        if let VelocitySpec::Kernel { mass_cap, .. } = &mut file.velocity {
            *mass_cap = Some(cap);
        }
        Scenario::new(file)
    }

    /// Hex SHA-256 of the canonical JSON form of the scenario.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.file).expect("scenario serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
