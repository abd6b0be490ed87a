use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("covariance not positive semi-definite after jitter")]
    DegenerateCovariance,
    #[error("no valid action available")]
    NoValidAction,
    #[error("log-likelihood returned NaN at iteration {iteration}")]
    NanLogLikelihood { iteration: usize },
    #[error("chain holds no samples")]
    EmptyChain,
    #[error("optimization diverged: {0}")]
    Diverged(String),
    #[error("strategy chart is missing an entry: {0}")]
    MissingChartEntry(String),
    #[error("seed search cap exceeded after {tried} candidates")]
    SearchCapExceeded { tried: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
