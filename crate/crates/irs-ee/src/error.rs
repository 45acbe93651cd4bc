//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("beamforming vector for user {0} is zero")]
    ZeroBeamformer(usize),

    #[error("effective channel for user {0} is zero")]
    DegenerateChannel(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("start point is not strictly feasible")]
    NotStrictlyFeasible,

    #[error("iteration limit reached in {0}")]
    MaxIterations(&'static str),

    #[error("no QoS-feasible randomization candidate")]
    NoFeasibleCandidate,

    #[error("non-positive logarithm argument")]
    NonPositiveLog,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for the infeasibility-style errors that callers downgrade to a
    /// flagged result instead of aborting.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::NotStrictlyFeasible | Error::NoFeasibleCandidate
        )
    }
}
