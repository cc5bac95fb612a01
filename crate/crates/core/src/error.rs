use thiserror::Error;

/// Errors raised by the model operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate portfolio state: {0}")]
    DegenerateState(&'static str),

    #[error("no edge: p = {p} must exceed q = {q}")]
    NoEdge { p: f64, q: f64 },

    #[error("invalid probabilities: p + q = {sum}, expected 1")]
    InvalidProbability { sum: f64 },

    /// The price was driven to zero or below. Downstream this is the
    /// signature of a run-away phase.
    #[error("dynamics breakdown: price would become {price}")]
    DynamicsBreakdown { price: f64 },

    #[error("degenerate exponent: {0}")]
    DegenerateExponent(&'static str),

    #[error("no solution: {0}")]
    NoSolution(&'static str),

    /// Root lies beyond the search cap.
    #[error("solution unbounded beyond cap {cap}")]
    Unbounded { cap: f64 },

    #[error("operation requires {0} mode")]
    WrongMode(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        })
    }
}
