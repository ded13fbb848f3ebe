//! Error types shared across the crate.

use thiserror::Error;

/// Anything that can go wrong inside the numeric pipeline.
#[derive(Debug, Error)]
pub enum MinsurfError {
    /// Invalid input data: malformed space spec, bad semiaxes, open mesh...
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Structural defect of a triangle mesh (open edge, wrong genus,
    /// degenerate triangle, inconsistent orientation).
    #[error("mesh error: {0}")]
    Mesh(String),

    /// An iterative solver failed to converge within its budget.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The flow reached a configuration the surgery machinery cannot
    /// handle (no admissible neck at the trigger curvature).
    #[error("canonical neighborhood failure: {0}")]
    CanonicalNeighborhood(String),

    /// A numerical check that guards an invariant failed after retries.
    #[error("invariant check failed: {0}")]
    Invariant(String),

    /// Problems reading or writing artifact files.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Problems parsing JSON configs or specs.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MinsurfError>;
