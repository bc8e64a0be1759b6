use thiserror::Error;

/// Errors raised while building or evaluating scales, measures, chains and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate measure: cell {cell} = [{left}, {right}) has zero mass")]
    DegenerateMeasure { cell: usize, left: f64, right: f64 },

    #[error("degenerate scale: s is not strictly increasing across cell {cell} = [{left}, {right}]")]
    DegenerateScale { cell: usize, left: f64, right: f64 },

    #[error("unsupported function class: {0}")]
    Unsupported(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("reference unavailable: {0}")]
    ReferenceUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{what} = {x} outside [0, 1]")));
    }
    Ok(())
}
