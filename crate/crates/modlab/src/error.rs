use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("singular sample point at x = {0}")]
    SingularSample(f64),
    #[error("non-finite value produced: {0}")]
    NonFinite(String),
    #[error("nonnegativity required (sample {index} = {value})")]
    Negative { index: usize, value: f64 },
    #[error("window must be nonzero")]
    ZeroWindow,
    #[error("non-convergent quadrature: {0}")]
    Quadrature(String),
    #[error("empty admissible subgrid")]
    EmptySubgrid,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(what: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { what: what.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
