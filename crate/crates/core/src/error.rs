use alloc::string::String;

/// Errors reported by planning, sampling and execution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid band specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample size {requested} exceeds relation size {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("grid partitioning is not defined for band width zero (dimension {dim})")]
    GridUndefined { dim: usize },

    #[error("grid with multiplier {multiplier} has too many cells to address")]
    GridTooFine { multiplier: u32 },

    #[error("oracle join of {pairs} candidate pairs exceeds the limit of {limit}")]
    OracleTooLarge { pairs: u128, limit: u128 },

    #[error("calibration needs at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("calibration design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
