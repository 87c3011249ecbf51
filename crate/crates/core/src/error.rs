use thiserror::Error;

use crate::evolution::EvolutionState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(&'static str),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dense assembly of {n} nodes exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("operator is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("active-set iteration did not settle after {iterations} outer iterations")]
    Cycling { iterations: usize },

    #[error("obstacle solver did not converge within {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("extension mode {mode} solve is singular")]
    ModeSolve { mode: usize },

    #[error("evolution step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
        partial: Box<EvolutionState>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

/// Rejects fractional orders outside the open unit interval.
pub(crate) fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::param("s", s, "fractional order must lie in (0, 1)"))
    }
}
