use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty structure")]
    Empty,

    #[error("unknown or dead id {0}")]
    BadId(usize),

    #[error("size mismatch: left {left}, right {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("infeasible instance: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
