use std::f64::consts::LN_10;

use crate::error::{Error, Result};

/// `10·log10(variance)`.
pub fn db(variance: f64) -> Result<f64> {
    if variance.is_finite() && variance > 0.0 {
        Ok(10.0 * variance.log10())
    } else {
        Err(Error::InvalidParameter { name: "variance", value: variance, reason: "must be positive for dB conversion" })
    }
}

/// Inverse of [`db`].
pub fn from_db(value: f64) -> f64 {
    10f64.powf(value / 10.0)
}

/// Squeeze factor r with e^{−2r} = 10^{−x/10} for `x` dB of squeezing.
pub fn squeeze_factor_from_db(x: f64) -> f64 {
    x * LN_10 / 20.0
}
