//! Numerical harmonic analysis on the hyperbolic plane.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod evolution;
pub mod geometry;
pub mod report;
pub mod specialfn;
pub mod transforms;

pub use error::{Checked, Error, Result, Warning};
pub use estimates::{EstimateGrid, EstimateResult, SmoothingConfig};
pub use evolution::{EvolutionGrid, EvolutionState, Multiplier, TimeGrid};
pub use report::{ExperimentReport, Stability, REPORT_SCHEMA};
pub use specialfn::{CFunctionEvaluator, GammaRatio, InverseSymbol, RootData, UnitSymbol};
