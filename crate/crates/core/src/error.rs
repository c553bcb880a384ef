//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("architectures do not belong to the given space spec: {0}")]
    SpaceMismatch(String),

    #[error("exact cell computation is limited to {limit} nodes, got {got}")]
    TooLarge { got: usize, limit: usize },

    #[error("pruned node counts differ ({a} vs {b}); no atomic-change path connects them")]
    NodeCountMismatch { a: usize, b: usize },

    #[error("no legal atomic change: {0}")]
    NoLegalMove(String),

    #[error("rejection sampling gave up after {0} consecutive invalid candidates")]
    RejectionOverflow(u64),

    #[error("{context}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("snapshot would hold no members")]
    EmptySnapshot,

    #[error("snapshot would exceed the member cap of {cap}")]
    MemoryCap { cap: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("architecture violates the space spec: {0}")]
    SpecViolation(String),

    #[error("benchmark table is empty")]
    EmptyBenchmark,

    #[error("benchmark table lookup failed: {0}")]
    MissingKey(String),

    #[error("normal equations are singular; use a positive ridge penalty")]
    SingularSystem,

    #[error("query budget {budget} cannot cover the initial sample of {needed}")]
    BudgetExhausted { budget: u64, needed: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0} is constant; correlation is undefined")]
    ZeroVariance(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need at least {need} observations per sample, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
