use thiserror::Error;

/// Errors raised by model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),

    #[error("grid mismatch: expected {expected} points, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("sideband frequency must be positive, got {0} rad/s")]
    NonPositiveFrequency(f64),

    #[error("singular linear system at {omega} rad/s")]
    Singular { omega: f64 },

    #[error("signal nulled by readout angle at {omega} rad/s")]
    SignalNulled { omega: f64 },

    #[error("conversion rates are not matched ({gamma_a} vs {gamma_c} rad/s)")]
    UnmatchedRates { gamma_a: f64, gamma_c: f64 },

    #[error("angle error {0} rad is outside the small-angle regime")]
    AngleTooLarge(f64),

    #[error("{what} = {value} Hz lies outside the grid range [{lo}, {hi}] Hz")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("invalid tuning setup: {0}")]
    InvalidTuneSpec(String),

    #[error("operation requires scheme mode `{expected}`, got `{found}`")]
    ModeMismatch { expected: &'static str, found: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must be finite and positive" })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must be finite and non-negative" })
    }
}

pub(crate) fn check_fraction(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must lie in [0, 1)" })
    }
}

pub(crate) fn check_frequency(omega: f64) -> Result<f64> {
    if omega.is_finite() && omega > 0.0 {
        Ok(omega)
    } else {
        Err(Error::NonPositiveFrequency(omega))
    }
}
