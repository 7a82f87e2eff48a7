//! Error type shared by all simulation modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The density matrix violates Hermiticity, unit trace or positivity.
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    /// Operation needs population in the |HV>/|VH> subspace but found none.
    #[error("state carries no H/V pair population")]
    EmptyHvSubspace,

    #[error("one-time pad key ({key_len} bits) shorter than message ({msg_len} bits)")]
    KeyTooShort { key_len: usize, msg_len: usize },

    #[error("target unreachable: {0}")]
    TargetUnreachable(String),

    /// Rate estimators need at least one decided bit.
    #[error("no decided bits in transmission record")]
    NoDecodedBits,

    #[error("calibration did not converge: {0}")]
    NonConvergence(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
