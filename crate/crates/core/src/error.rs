use thiserror::Error;

use crate::setops::IndeterminateId;

/// Errors raised by the set arithmetic, the model pipeline and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("assignment is missing indeterminate {0}")]
    IncompleteAssignment(IndeterminateId),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("ZMP undefined: normal force component is zero")]
    UndefinedZmp,

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("scenario {path}: {message}")]
    Scenario { path: String, message: String },

    #[error("malformed reach dump: {0}")]
    Dump(String),

    #[error("malformed plan log (line {line}): {message}")]
    PlanLog { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
