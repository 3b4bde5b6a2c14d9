use thiserror::Error;

/// Errors surfaced by the library API.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("dataset load error: {0}")]
    Load(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("selection failed: all candidates diverged: {0}")]
    Selection(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
