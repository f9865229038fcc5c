use thiserror::Error;

use crate::model::ModelVariant;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("input `{0}` must be strictly positive and finite")]
    NonPositiveInput(&'static str),

    #[error("polariton splitting {delta_bar:e} is below the degeneracy threshold; the beating period is infinite")]
    DegenerateSplitting { delta_bar: f64 },

    #[error("classical dynamics are unstable (largest drift eigenvalue real part {max_real_part:e})")]
    Unstable { max_real_part: f64 },

    #[error("`{operation}` has no closed form for the {variant} variant")]
    UnsupportedVariant {
        operation: &'static str,
        variant: ModelVariant,
    },

    #[error("position grid misses {missing:e} of the probability mass")]
    GridTooNarrow { missing: f64 },

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("averaging window too short: {0}")]
    WindowTooShort(String),

    #[error("series does not span enough beating periods: {0}")]
    InsufficientSpan(String),

    #[error("integration step too large: {0}")]
    StepTooLarge(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
    Truncation,
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Context { source, .. } => source.class(),
            Error::TruncationTooSmall(_) => ErrorClass::Truncation,
            Error::InvalidParameter { .. }
            | Error::NonPositiveInput(_)
            | Error::UnsupportedVariant { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidScenario(_)
            | Error::WindowTooShort(_)
            | Error::InsufficientSpan(_)
            | Error::GridTooNarrow { .. } => ErrorClass::Config,
            Error::DegenerateSplitting { .. }
            | Error::Unstable { .. }
            | Error::DimensionMismatch { .. }
            | Error::StepTooLarge(_)
            | Error::InvalidState(_)
            | Error::Numerical(_) => ErrorClass::Numeric,
        }
    }
}
