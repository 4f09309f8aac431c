use crystalchain::CrystalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(CrystalError),
    #[error("dynamics failure: {0}")]
    Dynamics(CrystalError),
    #[error("fit failure: {0}")]
    Fit(CrystalError),
    #[error("malformed input: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// Process exit status: 2 arguments, 3 dynamics, 4 fit, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Csv(_) | CliError::Json(_) => 2,
            CliError::Dynamics(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}
