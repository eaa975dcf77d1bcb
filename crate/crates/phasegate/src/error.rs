//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {rows} x {cols} elements exceeds addressable size")]
    SizeOverflow { rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("every window is at or below the energy floor")]
    EmptyAudit,

    #[error("infeasible specification: {0}")]
    Infeasible(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("ARR1: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
