use crate::modulator::State;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid modulator: {0}")]
    InvalidModulator(String),

    #[error("state {0} has exit rate 0 (absorbing)")]
    AbsorbingState(State),

    #[error("finite chain is reducible: {0}")]
    Reducible(String),

    #[error("horizon must be finite and nonnegative, got {0}")]
    InvalidHorizon(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid jump law: {0}")]
    InvalidLaw(String),

    #[error("invalid characteristics: {0}")]
    InvalidCharacteristics(String),

    #[error("hypothesis {hypothesis} violated: {detail}")]
    HypothesisViolation {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, MapError>;
