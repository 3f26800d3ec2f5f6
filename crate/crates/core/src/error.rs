use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("numerical failure{}: {context}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NumericalFailure {
        step: Option<usize>,
        context: String,
    },

    #[error("radial step rejected after {attempts} dt-halvings at step {step}")]
    StepRejectionExhausted { step: usize, attempts: usize },

    #[error("operation requires a quadratic potential, got {0}")]
    UnsupportedPotential(&'static str),

    #[error("state violates the constraint sum(x) = 0 (|sum| = {sum:e})")]
    ConstraintViolation { sum: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("frequencies are not strictly interlacing at position {index}")]
    InterlacingViolation { index: usize },

    #[error("round trip reproduced frequencies with relative error {error:e}")]
    NonReproducible { error: f64 },

    #[error(
        "component {index} has proper frequency {gamma} but the group frequency is {expected}"
    )]
    FrequencyMismatch {
        index: usize,
        gamma: f64,
        expected: f64,
    },

    #[error("fiber sampler failed: {0}")]
    FiberSamplerFailure(String),

    #[error("found {found} peaks, {requested} requested")]
    InsufficientPeaks { requested: usize, found: usize },

    #[error("parse error at row {row}: {message}")]
    ParseError { row: usize, message: String },

    #[error("dates are not strictly increasing at row {row}")]
    NonMonotonicDates { row: usize },

    #[error("non-positive price at row {row}")]
    NonPositivePrice { row: usize },

    #[error("no fair value column and no constant fair value supplied")]
    MissingFairValue,

    #[error("series has {len} points, at least {min} required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// `InvalidParameter` for the named input.
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(step: Option<usize>, context: impl Into<String>) -> Self {
        Error::NumericalFailure {
            step,
            context: context.into(),
        }
    }

    /// True for errors caused by the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. }
                | Error::StepRejectionExhausted { .. }
                | Error::EigenNoConvergence { .. }
                | Error::NonReproducible { .. }
                | Error::FiberSamplerFailure(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
