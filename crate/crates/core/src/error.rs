//! Error type shared by all solver stages.

use thiserror::Error;

/// Errors produced while building partitions, augmentations and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    /// A vector or matrix had the wrong extent for the requested operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A block factorization found a triangular pivot below the rank tolerance.
    #[error("block {block} is numerically rank deficient (pivot {pivot:.3e} below tolerance)")]
    RankDeficient { block: usize, pivot: f64 },

    /// Cholesky hit a non-positive pivot; for the coupling matrix S this is the
    /// symptom of a rank-deficient input matrix.
    #[error("matrix is not positive definite at pivot {index} (value {value:.3e})")]
    NotPositiveDefinite { index: usize, value: f64 },

    /// Partition boundaries were non-monotone, out of range or empty.
    #[error("invalid partition boundaries: {0}")]
    InvalidBoundaries(String),

    /// The sign-alternating augmentation needs overlap only between consecutive
    /// blocks; anything else cannot be cancelled by the alternating signs.
    #[error("augmentation structure violation: {0}")]
    StructureViolation(String),

    /// A diagnostic was requested for a strategy it does not apply to.
    #[error("strategy mismatch: {0}")]
    StrategyMismatch(String),

    /// Catch-all for guarded diagnostic paths (e.g. dense assembly size caps).
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, SolveError>;
