use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("matrix {name} is not trace-free: tr = {trace} exceeds {tol:.1e}")]
    Trace {
        name: &'static str,
        trace: f64,
        tol: f64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Core(#[from] swlyap::Error),
}

impl CliError {
    /// Process exit status for this error: every error is an input error.
    pub fn exit_code(&self) -> i32 {
        2
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
