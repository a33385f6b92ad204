//! Nonlocal transport with a source term, approximated by alternating a
//! frozen-field push-forward with an explicit source step on a dyadic grid.

mod flow;
mod io;
mod scheme;
mod source;
mod velocity;

use thiserror::Error;

use crate::flatnorm::FlatNormError;
use crate::measure::MeasureError;

pub use flow::{expm, flow_map, push_through, FlowMap, DEFAULT_SUBSTEPS};
pub use io::{Scenario, ScenarioFile};
pub use scheme::{
    merge_nearby, partial_step, run_steps, scheme_step, simulate, Snapshot, StepOptions,
    Trajectory, PRUNE_THRESHOLD,
};
pub use source::{SourceModel, SourceSpec};
pub use velocity::{
    bump, Certificate, FrozenField, KernelField, VelocityModel, VelocitySpec, BUMP_LIP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    FlatNorm(#[from] FlatNormError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state mass {mass} exceeds the certified mass cap {cap}")]
    MassCapExceeded { mass: f64, cap: f64 },
    #[error("flow produced a non-finite position")]
    NonFinite,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("norm parameters differ from those the model was certified for")]
    ParamsMismatch,
}
