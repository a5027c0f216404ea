//! Driver errors and exit statuses.

use std::io;
use std::path::{Path, PathBuf};

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for usage, configuration, input-format and domain errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical failures: non-converged fits and precision errors.
pub const EXIT_NUMERICAL: i32 = 3;

/// Errors reported by the command-line driver.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation.
    #[error("{0}")]
    Usage(String),
    /// Invalid run configuration. `location` is `file:line:column` when the
    /// problem was found while parsing.
    #[error("{location}: {field}: {message}")]
    Config {
        /// Where in the file.
        location: String,
        /// Dotted path of the offending field.
        field: String,
        /// What is wrong.
        message: String,
    },
    /// Malformed data file.
    #[error("{}:{row}: {message}", path.display())]
    Format {
        /// File being read.
        path: PathBuf,
        /// 1-based line number.
        row: u64,
        /// What is wrong.
        message: String,
    },
    /// File system failure.
    #[error("{}: {source}", path.display())]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: io::Error,
    },
    /// Error raised by the toolkit.
    #[error(transparent)]
    Core(#[from] homtk_core::Error),
    /// A fit finished without meeting its convergence criteria.
    #[error("fit did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    /// Exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(homtk_core::Error::Precision(_)) | CliError::NotConverged(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, row: u64, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            row,
            message: message.into(),
        }
    }
}

/// Result alias for the driver.
pub type Result<T, E = CliError> = std::result::Result<T, E>;
