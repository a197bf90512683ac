use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("logic error: {0}")]
    Logic(String),

    #[error("without-replacement sampler exhausted all {m} coordinates")]
    SamplerExhausted { m: usize },

    #[error("iteration cap of {cap} exceeded after {iterations} iterations")]
    IterationCap { cap: u64, iterations: u64 },

    #[error("data load error at row {row}, column {col}: {message}")]
    DataLoad {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
