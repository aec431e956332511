//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter set violates its own invariants (probability budgets, ranges).
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// Chain has no unique stationary distribution (all principal minors vanish).
    #[error("degenerate chain: no unique stationary distribution")]
    DegenerateChain,

    /// Iterative method hit its iteration cap before reaching tolerance.
    #[error("no convergence within {0} iterations")]
    NonConvergence(usize),

    /// Requested size outside the supported range of an exact algorithm.
    #[error("unsupported size n = {0}")]
    UnsupportedSize(usize),

    /// Input value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Measured statistics are not attainable by any parameter pair.
    #[error("infeasible moments: {0}")]
    InfeasibleMoments(String),

    /// Too few samples to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
