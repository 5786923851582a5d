use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("`{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("unknown experiment `{name}` (expected one of {expected})")]
    UnknownExperiment { name: String, expected: String },
    #[error("config names experiment `{config}` but `{cli}` was requested")]
    ExperimentMismatch { config: String, cli: String },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: dispersive_lab::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 4,
            CliError::Numerical { source, .. } => match source {
                dispersive_lab::Error::BlowUp { .. } | dispersive_lab::Error::NonFinite(_) => 3,
                _ => 2,
            },
            _ => 2,
        }
    }

    /// One-line machine-readable report written to stderr on failure.
    pub fn report(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Syntax { .. } => "syntax",
            CliError::UnknownKey { .. } => "unknown_key",
            CliError::DuplicateKey(_) => "duplicate_key",
            CliError::InvalidValue { .. } => "invalid_value",
            CliError::UnknownExperiment { .. } => "unknown_experiment",
            CliError::ExperimentMismatch { .. } => "experiment_mismatch",
            CliError::Numerical { .. } => "numerical",
            CliError::Io { .. } => "io",
        };
        serde_json::json!({ "error": kind, "exit_code": self.exit_code(), "message": self.to_string() })
    }
}

pub(crate) fn numerical(context: impl Into<String>) -> impl FnOnce(dispersive_lab::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Numerical { context, source }
}

pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
