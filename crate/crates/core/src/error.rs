use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("alphabet mismatch: expected q={expected}, got q={actual}")]
    Alphabet { expected: u64, actual: u64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("counter store: {0}")]
    Counter(String),

    #[error("state space too large for exact enumeration: {states} states (limit {limit})")]
    StateSpace { states: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
