use thiserror::Error;

use crate::mgf_core::Family;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input of length {len} does not fit in {slots} slots")]
    Capacity { len: usize, slots: usize },
    #[error("ciphertexts belong to different engine contexts")]
    EngineMismatch,
    #[error("level budget exhausted at {op}")]
    LevelExhausted { op: &'static str },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate interval [{lo}, {hi}]")]
    Interval { lo: f64, hi: f64 },
    #[error("empty input vector")]
    EmptyInput,
    #[error("laplace scale {scale} >= 1: MGF at t=1 diverges")]
    ScaleTooLarge { scale: f64 },
    #[error("homomorphic path supports only the gaussian family, got {0:?}")]
    NonGaussianFamily(Family),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("value outside the supported domain: {0}")]
    Domain(String),
    #[error("unsupported dimensions: {0}")]
    Dimension(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
