use thiserror::Error;

/// Errors raised by the simulation library.
///
/// Variants split into two families that callers (the CLI in particular)
/// map to different exit codes: invalid input versus numerical failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("matrix dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("division guard: denominator {value:e} below {threshold:e}")]
    DivisionGuard { value: f64, threshold: f64 },

    #[error("bracketing failure: {0}")]
    Bracketing(String),

    #[error("step size {dt:e} exceeds the stability limit {limit:e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("degenerate profile: every value is below {0:e}")]
    DegenerateProfile(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::DivisionGuard { .. }
                | Error::Bracketing(_)
                | Error::DegenerateProfile(_)
                | Error::InsufficientSamples(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
