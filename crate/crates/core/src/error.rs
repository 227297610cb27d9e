use std::io;

use thiserror::Error;

/// Errors raised by the solver kernels, data ingestion and model I/O.
#[derive(Debug, Error)]
pub enum CfmError {
    /// A caller broke an operation's preconditions (shapes, ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input values are unusable (non-finite numbers, empty datasets).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A solver produced NaN/Inf or otherwise broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, CfmError>;

pub(crate) fn contract(msg: impl Into<String>) -> CfmError {
    CfmError::Contract(msg.into())
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(contract(format!(
            "{what}: length {got} does not match expected {expected}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(CfmError::Input(format!(
            "{what}: non-finite value {} at position {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}
