use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension d = {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    #[error("{what} is not normalized (deviation {deviation:e})")]
    NotNormalized { what: &'static str, deviation: f64 },

    #[error("unknown state label `{label}` for d = {dim}")]
    UnknownState { label: String, dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{what} = {value} is outside {domain}")]
    Domain { what: &'static str, value: f64, domain: String },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("propagation did not converge after {halvings} step halvings (residual {residual:e})")]
    NonConvergence { halvings: u32, residual: f64 },

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }

    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension { .. } => "invalid-dimension",
            Error::NotNormalized { .. } => "normalization",
            Error::UnknownState { .. } => "lookup",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Domain { .. } => "domain",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::NonConvergence { .. } => "integrator",
            Error::SingularFit(_) => "fit-singular",
            Error::InvalidDensityMatrix(_) => "invalid-density-matrix",
            Error::Serialization(_) => "serialization",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
