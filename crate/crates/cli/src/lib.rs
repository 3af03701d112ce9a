//! File IO, configuration, and pipeline orchestration around
//! `crossvote-core`. The `crossvote` binary is a thin wrapper over this
//! library so the pipeline can also be driven from tests.

pub mod config;
pub mod corpus;
pub mod error;
pub mod pipeline;

pub use error::AppError;

pub type Result<T> = std::result::Result<T, AppError>;
