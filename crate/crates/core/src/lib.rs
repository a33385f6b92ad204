//! Generalized Wasserstein distances on discrete signed measures, and a
//! particle scheme for nonlocal transport equations with a source term.

pub mod analysis;
pub mod dynamics;
pub mod flatnorm;
pub mod measure;

pub use flatnorm::{
    dual_value, gw_distance, signed_distance, signed_norm, w1_classic, FlatNormError, NormParams,
    TransportSolution,
};
pub use measure::{linear_combine, Atom, JordanPair, MeasureError, Point, SignedMeasure};
