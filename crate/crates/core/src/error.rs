use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum SddeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("assumption not satisfied: {0}")]
    Inadmissible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SddeError>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SddeError::Argument(msg.into()))
}

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SddeError::Dimension(msg.into()))
}
