use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] rigidity_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("rerun differs from the manifest in: {0}")]
    Mismatch(String),
}

pub type LabResult<T> = std::result::Result<T, LabError>;

/// Machine-readable error written to stderr by the CLI.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
}

impl LabError {
    pub fn kind(&self) -> &'static str {
        use rigidity_core::Error as E;
        match self {
            LabError::Core(E::ResourceCap { .. }) => "resource_cap",
            LabError::Core(E::InvalidCovariance(_)) => "invalid_covariance",
            LabError::Core(_) => "invalid_input",
            LabError::Config(_) | LabError::Json(_) => "schema_violation",
            LabError::Io(_) | LabError::Csv(_) => "io",
            LabError::Mismatch(_) => "reproducibility",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            error: self.kind(),
            message: self.to_string(),
        }
    }
}
