//! Crate error type.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A llocs record did not match the grammar. Line numbers are 1-based.
    #[error("line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error("line {line}: confidence out of range: {value}")]
    ConfidenceOutOfRange { line: usize, value: f64 },

    /// x_start went backwards relative to the previous record.
    #[error("line {line}: x_start is not non-decreasing")]
    NonMonotoneStart { line: usize },

    /// A programmatically constructed entry or hypothesis violates an
    /// invariant (confidence range, span order, alternative ordering, ...).
    #[error("invalid llocs entry: {0}")]
    InvalidEntry(String),

    #[error("undefined CER: ground truth is empty")]
    EmptyGroundTruth,

    #[error("line count mismatch: expected {expected}, found {actual}")]
    LineCountMismatch { expected: usize, actual: usize },

    #[error("improvement rate undefined: base CER is not positive")]
    ZeroBaseCer,

    /// The 2x2 contingency table has a zero margin.
    #[error("degenerate contingency table")]
    DegenerateTable,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid error model: {0}")]
    InvalidModel(String),
}
