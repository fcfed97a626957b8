use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field of a model, table or config failed validation.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("state {0} is terminal")]
    TerminalState(usize),

    #[error("index out of range: {what} = {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("trajectory enumeration exceeded the node budget of {budget}")]
    BudgetExceeded { budget: usize },

    #[error("soft value iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("policy puts mass {mass} on action {action} where the default policy has none")]
    NotAbsolutelyContinuous { action: usize, mass: f64 },

    #[error("KL divergence evaluated to {0:e}, below the rounding tolerance")]
    NegativeKl(f64),

    #[error("behaviour probability of taken action {action} in state {state} at t = {t} is zero")]
    ImpossibleTrajectory {
        t: usize,
        state: usize,
        action: usize,
    },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
