//! One error type for every command, mapped onto process exit codes.

use std::path::{Path, PathBuf};

use uitrace_core::featurize::EmbedError;
use uitrace_core::ranking::RankingError;
use uitrace_core::scoring::ScoringError;
use uitrace_core::stats::StatsError;
use uitrace_core::trace::TraceError;

/// Exit status for a run that succeeded.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid input data or configuration.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for a computation that could not produce a result.
pub const EXIT_COMPUTE: i32 = 3;
/// Exit status for filesystem or network failures.
pub const EXIT_IO: i32 = 4;

/// Errors surfaced by the file formats and commands.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Reading or writing a file failed.
    #[error("{}: {source}", path.display())]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
    /// A record could not be parsed.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        /// File involved.
        path: PathBuf,
        /// One-based line number.
        line: usize,
        /// What was wrong.
        message: String,
    },
    /// Trace or corpus validation failed.
    #[error(transparent)]
    Trace(#[from] TraceError),
    /// An image could not be embedded.
    #[error(transparent)]
    Embed(#[from] EmbedError),
    /// A configuration value is missing or out of range.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Inputs are well-formed but inconsistent with each other.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Scoring failed.
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    /// A Bradley-Terry fit failed.
    #[error("{rater}: {source}")]
    Ranking {
        /// Rater whose records were being fitted.
        rater: String,
        /// Underlying error.
        #[source]
        source: RankingError,
    },
    /// An agreement statistic could not be computed.
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl Error {
    /// Wraps an IO error with the path it concerns.
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => EXIT_IO,
            Error::Parse { .. } | Error::Trace(_) | Error::Embed(_) | Error::Config(_) | Error::Invalid(_) => {
                EXIT_VALIDATION
            }
            Error::Scoring(e) => match e {
                ScoringError::Metric { .. } => EXIT_COMPUTE,
                _ => EXIT_VALIDATION,
            },
            Error::Ranking { source, .. } => match source {
                RankingError::Disconnected { .. } | RankingError::Singular => EXIT_COMPUTE,
                _ => EXIT_VALIDATION,
            },
            Error::Stats(e) => match e {
                StatsError::ZeroVariance => EXIT_COMPUTE,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
