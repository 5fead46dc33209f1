use std::path::PathBuf;

/// Errors raised by the numerical core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("no {bits}-bit prime found within the retry budget")]
    RetryBudget { bits: u32 },

    #[error("series did not converge after {terms} terms")]
    NonConvergence { terms: usize },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("no root of the quantisation condition in [{lo}, {hi}]")]
    NoLevel { lo: f64, hi: f64 },

    #[error("unstable parameters: {0}")]
    Unstable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
