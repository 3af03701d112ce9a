//! Application error with process exit-code mapping: 1 usage, 2 data,
//! 3 external command.

use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum AppError {
    /// Command line or configuration misuse.
    Usage(String),
    /// Broken or missing input data.
    Data(String),
    /// An external command failed; the status is part of the message.
    External(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::External(_) => 3,
        }
    }

    pub fn data_with_path(path: &Path, err: impl fmt::Display) -> Self {
        AppError::Data(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(msg) => write!(f, "usage error: {msg}"),
            AppError::Data(msg) => write!(f, "data error: {msg}"),
            AppError::External(msg) => write!(f, "external command error: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<crossvote_core::Error> for AppError {
    fn from(err: crossvote_core::Error) -> Self {
        AppError::Data(err.to_string())
    }
}
