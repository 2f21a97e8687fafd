use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("contraction condition fails: n = {n}, delta = {delta}, condition value = {value}")]
    ContractionCondition { n: usize, delta: f64, value: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("property check failed: {0}")]
    Property(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::DimensionMismatch(_) => 2,
            Error::Parse { .. } => 3,
            Error::ContractionCondition { .. } | Error::Solver(_) => 4,
            Error::Property(_) => 5,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
