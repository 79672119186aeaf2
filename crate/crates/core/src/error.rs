use thiserror::Error;

use crate::simplex::Face;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("chart mismatch: expected face {expected}, found {found}")]
    ChartMismatch { expected: Face, found: Face },

    #[error("evaluation failed: factor {factor} vanishes at the given point")]
    Singular { factor: String },

    #[error("eigen-decomposition failed on face {face} (degree block {degree}): {reason}")]
    Decomposition {
        face: Face,
        degree: u32,
        reason: String,
    },

    #[error("no continuous extension to face {face}: factor {factor} remains after cancellation")]
    NoContinuousExtension { face: Face, factor: String },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("final condition on face {face} is outside the model: {reason}")]
    OutOfModel { face: Face, reason: String },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
