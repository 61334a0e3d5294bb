use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stov_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Arg(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{command}: {} check(s) failed: {}", failed.len(), failed.join("; "))]
    ChecksFailed {
        command: String,
        failed: Vec<String>,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;
