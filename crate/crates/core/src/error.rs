use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("input contains non-finite entries")]
    NonFiniteInput,

    #[error("non-finite value produced at iteration {iteration}")]
    NonFiniteIteration { iteration: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("starting block is numerically rank deficient (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("PCG breakdown at iteration {iteration}: non-positive curvature {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("corrupt chunked matrix file: {0}")]
    CorruptFile(String),

    #[error("truncated chunked matrix file: expected {expected} bytes, found {found} (data ends at byte offset {found})")]
    TruncatedFile { expected: u64, found: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
