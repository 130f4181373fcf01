use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported root system kind `{0}`")]
    UnsupportedKind(String),
    #[error("coweight {0:?} is not dominant")]
    NotDominant(Vec<i64>),
    #[error("radius {have} too small, need at least {need}")]
    RadiusTooSmall { have: usize, need: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("graph rejected: {0}")]
    Graph(String),
    #[error("triangle presentation rejected: {0}")]
    Presentation(String),
    #[error("chamber system failed validation: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("transfer row {row} sums to {sum}, expected {expected}")]
    RowSum { row: usize, sum: u64, expected: u64 },
    #[error("operators do not commute: {0}")]
    Commutation(String),
    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
