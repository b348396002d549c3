use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid value vector: {0}")]
    InvalidValue(String),

    #[error("non-finite reward at module {module}")]
    NonFiniteReward { module: usize },

    #[error("solver did not converge: projected-gradient norm {grad_norm} after {iterations} iterations")]
    SolverDidNotConverge {
        grad_norm: f64,
        iterations: usize,
        last_iterate: Vec<f64>,
    },

    #[error("truthfulness undefined at round {round}: marginal contributions sum to {total} <= 0")]
    TruthfulnessUndefined { round: u64, total: f64 },

    #[error("incomplete trace: {0}")]
    IncompleteTrace(String),

    #[error("slope fit: {0}")]
    SlopeFit(String),

    #[error("round index {t} out of range 1..={horizon}")]
    RoundOutOfRange { t: u64, horizon: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
