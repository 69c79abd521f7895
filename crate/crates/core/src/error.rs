use std::io;

use thiserror::Error;

/// Errors raised by the lab. Each variant maps onto one CLI exit class.
#[derive(Debug, Error)]
pub enum LabError {
    /// A model or agent parameter is out of its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    /// An input lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The sparse environment table grew past its configured cap.
    #[error("environment table exceeded its cap of {cap} states")]
    Overflow { cap: usize },

    /// Not enough observations for an estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A configuration file failed to parse or validate.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        LabError::Parameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
