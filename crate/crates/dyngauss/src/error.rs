//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numeric failure in {context}: {msg}")]
    Numeric { context: String, msg: String },
    #[error("checkpoint version mismatch: expected {expected}, got {actual}")]
    VersionMismatch { expected: u32, actual: u32 },
    #[error("corrupt file {path}: {msg}")]
    Corrupt { path: String, msg: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numeric(context: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            msg: msg.into(),
        }
    }
}
