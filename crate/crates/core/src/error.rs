use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {z} is within {tol:e} of a pole of the gamma function")]
    PoleProximity { z: Complex64, tol: f64 },

    #[error("point is within {tol:e} of the boundary point at angle {beta}")]
    BoundaryProximity { beta: f64, tol: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("finite-difference step {step:e} underflows the minimum {min:e}")]
    StepUnderflow { step: f64, min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("multiplier `{0}` has no derivative evaluator")]
    MissingDerivative(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal numerical diagnostics attached to transform outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Warning {
    /// Input not negligible on the outer rings of the polar grid.
    SupportLeakage { relative: f64 },
    /// Spectral data not decayed at the largest grid frequency.
    SpectralTruncation { relative: f64 },
    /// Horocycle integrand not decayed at the arc-parameter cutoff.
    HorocycleTruncation { relative: f64 },
    /// Exponentially reweighted horocycle data not decayed at |H| = H_max.
    DecayViolation { relative: f64 },
    /// Dual transform asked for H outside the tabulated range.
    Coverage { fraction: f64 },
    /// Forcing changes too much between time nodes for its interpolant.
    TimeResolution { relative: f64 },
    /// Energy near the Nyquist frequency of a 1D grid.
    Aliasing { relative: f64 },
    /// Time integrand still significant at the horizon.
    TimeHorizon { relative: f64 },
    /// Weighted norm dominated by the tail of the H grid.
    Divergence { tail_fraction: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::SupportLeakage { relative } => {
                write!(f, "support leakage: outer rings at {relative:.3e} of max")
            }
            Warning::SpectralTruncation { relative } => {
                write!(
                    f,
                    "spectral truncation: {relative:.3e} of max at the cutoff"
                )
            }
            Warning::HorocycleTruncation { relative } => {
                write!(
                    f,
                    "horocycle truncation: {relative:.3e} of max at |s| = S_max"
                )
            }
            Warning::DecayViolation { relative } => {
                write!(f, "decay violation: {relative:.3e} of max at |H| = H_max")
            }
            Warning::Coverage { fraction } => {
                write!(f, "coverage: {fraction:.3e} of lookups outside the H range")
            }
            Warning::TimeResolution { relative } => {
                write!(
                    f,
                    "time resolution: forcing second difference {relative:.3e} of its max"
                )
            }
            Warning::Aliasing { relative } => {
                write!(f, "aliasing: {relative:.3e} of max at Nyquist")
            }
            Warning::TimeHorizon { relative } => {
                write!(
                    f,
                    "time horizon: integrand at |t| = T is {relative:.3e} of max"
                )
            }
            Warning::Divergence { tail_fraction } => {
                write!(
                    f,
                    "divergence: H-grid tail carries {tail_fraction:.3e} of the norm"
                )
            }
        }
    }
}

/// A value together with the diagnostics raised while computing it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn new(value: T) -> Self {
        Self {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn with(value: T, warnings: Vec<Warning>) -> Self {
        Self { value, warnings }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked {
            value: f(self.value),
            warnings: self.warnings,
        }
    }

    pub fn into_inner(self) -> T {
        self.value
    }
}
