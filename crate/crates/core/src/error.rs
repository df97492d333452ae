use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("infinite variance: alpha = {alpha} <= 2")]
    InfiniteVariance { alpha: f64 },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("combinatorial blowup: C({dim}, {size}) exceeds {limit}")]
    Combinatorial { dim: usize, size: usize, limit: u64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invariant violated in replicate {replicate}: {what}")]
    Invariant { replicate: usize, what: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
