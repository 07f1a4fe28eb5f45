use thiserror::Error;

pub type Result<T> = std::result::Result<T, DolError>;

#[derive(Debug, Error)]
pub enum DolError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series, iteration or integrator failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Inconsistent configuration (grid too small, empty data, bad sampler settings).
    #[error("configuration error: {0}")]
    Config(String),

    /// Conditioning on an event of probability zero.
    #[error("cannot condition on survival probability zero at t = {t} h")]
    NullConditioning { t: f64 },

    /// The residual-life median was not reached before the search horizon.
    #[error("median beyond horizon ({horizon} h)")]
    MedianBeyondHorizon { horizon: f64 },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DolError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DolError::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        DolError::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        DolError::Config(msg.into())
    }

    /// True for numerical failures, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, DolError::Numeric(_))
    }
}
