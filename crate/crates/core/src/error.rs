use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("shape error: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown {what} `{name}`")]
    Lookup { what: &'static str, name: String },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("calibration error ({matrix}): {reason}")]
    Calibration { matrix: String, reason: String },

    #[error("degenerate mitigation: every count was clipped to zero{}", slot_suffix(.slot))]
    DegenerateMitigation { slot: Option<usize> },

    #[error("degenerate output: all entries fall below threshold {0}")]
    DegenerateOutput(f64),

    #[error("routing error: {0}")]
    Routing(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

fn slot_suffix(slot: &Option<usize>) -> String {
    match slot {
        Some(s) => format!(" (parameter slot {s})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
