use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1, got {0}")]
    Dimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("operation requires dimension 1, got {0}")]
    UnsupportedDimension(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degree {degree} out of range (truncation {max})")]
    Range { degree: usize, max: usize },
    #[error("boundary modulus sample {index} is not positive ({value})")]
    Modulus { index: usize, value: f64 },
    #[error("input is not homogeneous")]
    NotHomogeneous,
    #[error("finite section is singular: {0}")]
    Singular(String),
    #[error("overflow risk: {0}")]
    Overflow(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::Parameter(_) => "parameter",
            Error::Range { .. } => "range",
            Error::Modulus { .. } => "modulus",
            Error::NotHomogeneous => "not_homogeneous",
            Error::Singular(_) => "singular",
            Error::Overflow(_) => "overflow",
            Error::Schema(_) | Error::Json(_) => "schema",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
