use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not canonical: {0}")]
    NotCanonical(String),

    #[error("matrix has a zero dimension ({rows}x{cols})")]
    ZeroDimension { rows: usize, cols: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix pattern is not symmetric: ({row}, {col}) has no mirror entry")]
    AsymmetricPattern { row: usize, col: usize },

    #[error("matrix is not positive definite at column {column} (pivot {pivot})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("invalid density {0}: must be in (0, 1]")]
    InvalidDensity(f64),

    #[error("{}:{line}: {msg}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("invalid bundle capacity {0}: must be in 1..=65535")]
    InvalidCapacity(usize),

    #[error("malformed RIR stream: {0}")]
    MalformedStream(String),

    #[error("CAM overflow: bundle of {len} elements exceeds CAM capacity {capacity}")]
    CamOverflow { len: usize, capacity: usize },

    #[error("partial products are not sorted by column at position {0}")]
    UnsortedPartials(usize),

    #[error("symbolic pattern does not match matrix: {0}")]
    PatternMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
