use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("field resolution mismatch: {0}")]
    Resolution(String),

    #[error("operation expects a field in the {expected} plane, found {found}")]
    Plane { expected: &'static str, found: &'static str },

    #[error("measurement record is empty")]
    EmptyRecord,

    #[error("measurement record has no counts")]
    ZeroCounts,

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status: 3 for numerical non-convergence, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NonConvergence(_) => 3,
            _ => 2,
        }
    }
}
