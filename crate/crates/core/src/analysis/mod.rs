//! Verification harness: refinement studies, stability and a-priori estimate
//! checks along trajectories, and seeded property suites for the distance.

mod constants;
mod convergence;
mod dependence;
mod estimates;
mod properties;
pub mod random;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::flatnorm::FlatNormError;

pub use constants::TheoremConstants;
pub use convergence::{convergence_table, sup_distance, ConvergenceReport, ConvergenceRow};
pub use dependence::{continuous_dependence_check, DependenceReport, DependenceRow};
pub use estimates::{
    growth_check, log_log_slope, splitting_residuals, time_lipschitz_rows, GrowthCheck,
    LipschitzRow, SplittingReport,
};
pub use properties::{property_names, property_suite, PropertyRecord, PropertyReport};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    FlatNorm(#[from] FlatNormError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<crate::measure::MeasureError> for AnalysisError {
    fn from(e: crate::measure::MeasureError) -> Self {
        AnalysisError::FlatNorm(e.into())
    }
}
