use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value at index {index} ({context})")]
    NonFinite { index: usize, context: String },

    #[error("target {value} outside interpolation range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("field not negligible at the right boundary: {value:e} > {threshold:e}")]
    DomainTruncation { value: f64, threshold: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid glue specification: {0}")]
    Spec(String),

    #[error("step unstable after {retries} retries at t = {t}")]
    Instability { t: f64, retries: usize },

    #[error("frame error: {0}")]
    Frame(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },

    #[error("fit error: {0}")]
    Fit(String),
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
