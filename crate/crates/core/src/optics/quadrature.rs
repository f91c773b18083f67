use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, RowVector2, Vector2};
pub use num_complex::Complex64 as C64;

use super::FrequencyGrid;
use crate::error::{Error, Result};

/// 2×2 complex matrix acting on (amplitude, phase) quadratures.
pub type Mat2 = Matrix2<C64>;
/// Column quadrature vector (e.g. a signal response).
pub type Vec2 = Vector2<C64>;
/// Row quadrature vector (e.g. a homodyne projection).
pub type RowVec2 = RowVector2<C64>;

/// Generator of quadrature rotations: `rotation(φ) = cos φ·I + sin φ·J`.
pub const J: Mat2 = Matrix2::new(C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0));

/// Real rotation `[[cos, −sin], [sin, cos]]`.
pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c.into(), (-s).into(), s.into(), c.into())
}

/// Quadrature transfer of a device that multiplies the upper sideband
/// (ω₀ + Ω) by `upper` and the lower sideband (ω₀ − Ω) by `lower`.
///
/// A common phase φ on both sidebands gives `rotation(φ)`.
pub fn from_sidebands(upper: C64, lower: C64) -> Mat2 {
    let a = (upper + lower.conj()) * 0.5;
    let b = (upper - lower.conj()) * 0.5;
    let i = C64::i();
    Mat2::new(a, i * b, -i * b, a)
}

/// Rotation angle (mod π, in (−π/2, π/2]) carried by a transfer of the form
/// `g·(A·I + B·J)`. Any non-rotational part is ignored.
pub fn rotation_angle(m: &Mat2) -> f64 {
    let a = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let b = (m[(1, 0)] - m[(0, 1)]) * 0.5;
    wrap_half_turn((b * a.conj()).re.atan2(a.norm_sqr()))
}

/// Wraps an angle into (−π/2, π/2], the natural range for quadrature angles.
pub fn wrap_half_turn(angle: f64) -> f64 {
    let mut x = angle % PI;
    if x > FRAC_PI_2 {
        x -= PI;
    } else if x <= -FRAC_PI_2 {
        x += PI;
    }
    x
}

/// Frequency-dependent 2×2 transfer sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTransfer {
    values: Vec<Mat2>,
}

impl QuadratureTransfer {
    pub fn constant(grid: &FrequencyGrid, m: Mat2) -> Self {
        Self::repeat(grid.len(), m)
    }

    pub(crate) fn repeat(n: usize, m: Mat2) -> Self {
        Self { values: vec![m; n] }
    }

    pub fn identity(grid: &FrequencyGrid) -> Self {
        Self::constant(grid, Mat2::identity())
    }

    pub fn rotation(grid: &FrequencyGrid, angle: f64) -> Self {
        Self::constant(grid, rotation(angle))
    }

    pub fn try_from_fn(grid: &FrequencyGrid, f: impl Fn(f64) -> Result<Mat2>) -> Result<Self> {
        let values = grid.omegas().iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;
        Ok(Self { values })
    }

    pub fn from_values(grid: &FrequencyGrid, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &QuadratureTransfer) -> Result<Self> {
        if self.len() != first.len() {
            return Err(Error::GridMismatch { expected: self.len(), found: first.len() });
        }
        let values = self.values.iter().zip(&first.values).map(|(a, b)| a * b).collect();
        Ok(Self { values })
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { values: self.values.iter().map(|m| m * C64::from(k)).collect() }
    }
}
