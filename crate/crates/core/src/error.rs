use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value out of range: {0}")]
    Range(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("structural error: {0}")]
    Structure(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },
    #[error("degenerate geometry: {0}")]
    Geometry(String),
    #[error("mesh `{0}` not found in mesh store")]
    MissingMesh(String),
    #[error("parse error{}: {message}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Parse {
        message: String,
        offset: Option<usize>,
        /// Raw input kept for diagnosis.
        payload: Option<String>,
    },
    #[error("provider error: {message}")]
    Provider { message: String, retriable: bool },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape { expected: expected.to_string(), actual: actual.to_string() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Error::Parse { message: message.into(), offset: None, payload: None }
    }
}
