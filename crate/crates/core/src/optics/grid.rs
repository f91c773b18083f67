use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point placement between the grid endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

impl Spacing {
    pub fn as_str(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Logarithmic => "logarithmic",
        }
    }
}

/// Ordered sideband angular frequencies Ω in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    spacing: Spacing,
}

impl FrequencyGrid {
    /// Grid from `f_min` to `f_max` (Hz, both included) with `n` points.
    pub fn new(f_min: f64, f_max: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if !(f_min.is_finite() && f_max.is_finite()) || f_min <= 0.0 {
            return Err(Error::InvalidGrid("bounds must be finite and positive"));
        }
        if f_min >= f_max {
            return Err(Error::InvalidGrid("f_min must be below f_max"));
        }
        if n < 2 {
            return Err(Error::InvalidGrid("at least two points are required"));
        }
        let last = (n - 1) as f64;
        let mut omegas: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / last;
                let f = match spacing {
                    Spacing::Linear => f_min + (f_max - f_min) * t,
                    Spacing::Logarithmic => f_min * (f_max / f_min).powf(t),
                };
                TAU * f
            })
            .collect();
        // Pin endpoints so they are exact regardless of rounding in powf.
        omegas[0] = TAU * f_min;
        omegas[n - 1] = TAU * f_max;
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points are not strictly increasing"));
        }
        Ok(Self { omegas, spacing })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn frequencies_hz(&self) -> impl Iterator<Item = f64> + '_ {
        self.omegas.iter().map(|w| w / TAU)
    }

    pub fn f_min_hz(&self) -> f64 {
        self.omegas[0] / TAU
    }

    pub fn f_max_hz(&self) -> f64 {
        self.omegas[self.omegas.len() - 1] / TAU
    }

    /// Rejects `f_hz` outside the closed grid range.
    pub fn check_contains(&self, what: &'static str, f_hz: f64) -> Result<()> {
        let (lo, hi) = (self.f_min_hz(), self.f_max_hz());
        let tol = 1e-12 * hi;
        if f_hz.is_finite() && f_hz >= lo - tol && f_hz <= hi + tol {
            Ok(())
        } else {
            Err(Error::OutOfRange { what, value: f_hz, lo, hi })
        }
    }
}

/// Convenience wrapper around [`FrequencyGrid::new`].
pub fn make_frequency_grid(f_min: f64, f_max: f64, n: usize, spacing: Spacing) -> Result<FrequencyGrid> {
    FrequencyGrid::new(f_min, f_max, n, spacing)
}
