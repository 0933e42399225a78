use alloc::string::String;

use thiserror::Error;

/// Errors raised by the pure core. IO failures live in the std companion crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate outside the image")]
    OutOfBounds,
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("unknown position label")]
    UnknownLabel,
    #[error("objects share cell ({row}, {col})")]
    OverlappingCells { row: u8, col: u8 },
    #[error("shape of side {side} at ({x}, {y}) does not fit inside the image")]
    ShapeOutOfBounds { side: u32, x: u32, y: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero-norm embedding vector")]
    ZeroNorm,
    #[error("unknown sample id {0:?}")]
    UnknownSample(String),
    #[error("duplicate entry for sample {0:?}")]
    DuplicateSample(String),
    #[error("malformed dump: {0}")]
    MalformedDump(String),
}
