//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not integral: {0}")]
    NotIntegral(String),
    #[error("form is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("basis is rank-deficient: {0}")]
    RankDeficient(String),
    #[error("ambient spaces do not match: {0}")]
    AmbientMismatch(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("enumeration budget exhausted after {nodes} nodes (budget {budget})")]
    BudgetExhausted { nodes: u64, budget: u64 },
    #[error("short vectors up to the depth norm do not span the space")]
    SpanningFailure,
    #[error("matrix is not an isometry of the lattice: {0}")]
    NotIsometry(String),
    #[error("element does not have prime order: {0}")]
    NotPrimeOrder(String),
    #[error("inadmissible neighbor witness: {0}")]
    Inadmissible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
