//! Crate-wide error type.

use thiserror::Error;

/// Unified error for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Geometry that cannot be processed: too few vertices, collinear
    /// rings, area below 1e-9, or a simplification that collapsed.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A parameter outside its documented domain (ratios, thresholds,
    /// step sizes, scene dimensions).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two maps that must share a shape do not.
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// A malformed binary payload: bad magic, truncation, trailing
    /// bytes, or dimensions whose product overflows.
    #[error("format error: {0}")]
    FormatError(String),

    /// A value outside the representable range of the target encoding.
    #[error("range error: {0}")]
    RangeError(String),

    /// A text input (annotation or detection file) that does not parse.
    /// `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    /// Missing or unusable input supplied to a top-level entry point.
    #[error("input error: {0}")]
    InputError(String),

    /// Scene generation could not place the requested regions within
    /// the retry budget.
    #[error("placement failed: {0}")]
    PlacementError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
