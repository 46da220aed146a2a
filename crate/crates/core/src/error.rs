use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the routing engine or the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its legal range {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("value {value} for `{what}` must lie in [0, 1]")]
    NotUnitInterval { what: &'static str, value: f64 },
    #[error("unknown dimension label `{0}`")]
    UnknownDimension(String),
    #[error("unknown difficulty `{0}`")]
    UnknownDifficulty(String),
    #[error("task dimension set is empty")]
    EmptyDimensions,
    #[error("invalid task `{id}`: {reason}")]
    InvalidTask { id: String, reason: String },
    #[error("roster is empty")]
    EmptyRoster,
    #[error("duplicate agent id `{0}` in roster")]
    DuplicateAgent(String),
    #[error("vote inputs are empty or their agent sets differ")]
    VoteMismatch,
    #[error("metric `{0}` needs at least one record")]
    EmptyRecords(&'static str),
    #[error("task `{0}` has no matching outcome")]
    MissingJoin(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("remote agent protocol violation: {0}")]
    Protocol(String),
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at {path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Coarse category used by the command-line driver for its exit code.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Read { .. } | Error::Write { .. } => ErrorCategory::Io,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) | Error::Protocol(_) => {
                ErrorCategory::Data
            }
            Error::Config(_)
            | Error::ParamOutOfRange { .. }
            | Error::EmptyRoster
            | Error::DuplicateAgent(_) => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Data,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Data => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
