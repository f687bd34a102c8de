use thiserror::Error;

/// Errors produced by estimation, sampling and I/O helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("insufficient data: {observed} observed failure(s), at least {required} required")]
    InsufficientData { observed: usize, required: usize },

    #[error(
        "Newton solver did not converge after {iterations} iterations \
         (last iterate alpha={alpha}, lambda={lambda}, |score|={grad_norm:e})"
    )]
    NoConvergence { iterations: usize, alpha: f64, lambda: f64, grad_norm: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("all importance weights are zero")]
    DegenerateWeights,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be a positive finite number, got {value}")))
    }
}

pub(crate) fn ensure_probability_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1), got {value}")))
    }
}
