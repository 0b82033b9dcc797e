use thiserror::Error;

use crate::types::{AdId, UserId};

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("context vector contains a non-finite value at index {index}")]
    NonFiniteContext { index: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("discount ratio {0} is outside [0, 1]")]
    InvalidGamma(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("unknown ad {0}")]
    UnknownAd(AdId),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("no target impressions to evaluate")]
    EmptyImpressions,
}

pub type Result<T> = std::result::Result<T, Error>;
