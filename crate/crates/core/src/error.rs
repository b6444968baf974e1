use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("structure fails validation: {0}")]
    Invalid(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("newton iteration diverged for input {input:?} (residual {residual:e})")]
    Divergence { input: Vec<f64>, residual: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dual flag mismatch: expected dual={expected}")]
    DualMismatch { expected: bool },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("bad grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
