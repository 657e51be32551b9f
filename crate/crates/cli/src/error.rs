use serde_json::json;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("files without a manifest entry: {}", .0.join(", "))]
    OrphanFiles(Vec<String>),

    #[error("artifact {path} does not match its manifest hash")]
    HashMismatch { path: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
            CliError::MissingArtifacts(_) => "missing_artifacts",
            CliError::OrphanFiles(_) => "orphan_files",
            CliError::HashMismatch { .. } => "hash_mismatch",
        }
    }

    /// One-line JSON object written to stderr on failure.
    pub fn to_json(&self) -> String {
        let details: Vec<String> = match self {
            CliError::MissingArtifacts(v) | CliError::OrphanFiles(v) => v.clone(),
            CliError::HashMismatch { path } => vec![path.clone()],
            _ => Vec::new(),
        };
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
            "details": details,
        })
        .to_string()
    }
}

impl From<brwre_core::Error> for CliError {
    fn from(e: brwre_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("I/O: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("JSON: {e}"))
    }
}
