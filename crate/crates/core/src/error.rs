use thiserror::Error;

/// Errors raised by the solvers, economies and generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::InvalidInput(format!("{what}: dimension mismatch (expected {expected}, got {got})")));
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if let Some((j, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: non-finite entry {x} at index {j}")));
    }
    Ok(())
}
