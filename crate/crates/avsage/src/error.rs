//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid numeric input or precondition violation in a model evaluation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Equivalent-time continuation could not reach the requested state.
    #[error("continuation error: {0}")]
    Continuation(String),

    /// Equivalent-waveform construction failed to bracket a root.
    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    /// Least-squares fit failure (rank deficiency, degenerate domain, ...).
    #[error("fit error: {0}")]
    Fit(String),

    /// Inconsistent internal state, e.g. a non-monotone delay bracket.
    #[error("internal error: {0}")]
    Internal(String),

    /// Configuration or input-file problem detected before any computation.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 2 for usage/config
    /// problems, 1 for computational failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
