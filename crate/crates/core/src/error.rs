use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The signal is flat (zero std or zero range) where a ratio or
    /// std-based threshold is required.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// Not enough room in the series to place the requested anomalies.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Interpolation requested outside the covered time range.
    #[error("out of range: {0}")]
    Range(String),

    #[error("failed to fit {model}: {reason}")]
    Fit { model: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateSignal(msg.into())
    }
}
