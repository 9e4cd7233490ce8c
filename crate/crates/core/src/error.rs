use thiserror::Error;

pub type Result<T> = std::result::Result<T, WalkError>;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("parameter `{name}` = {value} out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("coin state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("matrix is not unitary (max defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("momentum grid of size {grid_n} is too small, need at least {required}")]
    GridTooSmall { grid_n: usize, required: usize },

    #[error("decay fit needs at least {required} points, found {found}")]
    InsufficientPoints { found: usize, required: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
