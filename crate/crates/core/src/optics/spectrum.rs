use serde::{Deserialize, Serialize};

use super::{rotation, squeeze_factor_from_db, FrequencyGrid, Mat2, QuadratureTransfer, Vec2, C64};
use crate::error::{check_fraction, Error, Result};

/// Squeezed vacuum: variances e^{−2r} and e^{+2r} along principal axes.
/// At `angle = 0` the phase quadrature is squeezed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedState {
    pub r: f64,
    pub angle: f64,
}

impl SqueezedState {
    pub fn new(r: f64, angle: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter { name: "r", value: r, reason: "squeeze factor must be non-negative" });
        }
        if !angle.is_finite() {
            return Err(Error::InvalidParameter { name: "angle", value: angle, reason: "must be finite" });
        }
        Ok(Self { r, angle })
    }

    /// State squeezed by `db` decibels (positive = squeezing).
    pub fn from_db(db: f64, angle: f64) -> Result<Self> {
        Self::new(squeeze_factor_from_db(db), angle)
    }

    pub fn vacuum() -> Self {
        Self { r: 0.0, angle: 0.0 }
    }

    /// Variance of the squeezed quadrature, e^{−2r}.
    pub fn squeezed_variance(&self) -> f64 {
        (-2.0 * self.r).exp()
    }
}

/// `R(angle)·diag(e^{2r}, e^{−2r})·R(angle)ᵀ`.
pub fn squeezed_spectrum_matrix(state: &SqueezedState) -> Mat2 {
    let d = Mat2::new((2.0 * state.r).exp().into(), C64::default(), C64::default(), (-2.0 * state.r).exp().into());
    let rot = rotation(state.angle);
    rot * d * rot.transpose()
}

/// Squeezed spectrum, constant over the grid.
pub fn squeezed_spectrum(grid: &FrequencyGrid, state: &SqueezedState) -> SpectralDensity {
    SpectralDensity::constant(grid, squeezed_spectrum_matrix(state))
}

/// Per-frequency 2×2 Hermitian spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    values: Vec<Mat2>,
}

impl SpectralDensity {
    pub fn constant(grid: &FrequencyGrid, m: Mat2) -> Self {
        Self::repeat(grid.len(), m)
    }

    pub fn vacuum(grid: &FrequencyGrid) -> Self {
        Self::constant(grid, Mat2::identity())
    }

    pub fn from_values(grid: &FrequencyGrid, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { values })
    }

    fn repeat(n: usize, m: Mat2) -> Self {
        Self { values: vec![m; n] }
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
}

/// Independent noise source entering through its own transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub transfer: QuadratureTransfer,
    pub source: SpectralDensity,
}

/// `S_out = T S_in T† + Σ N_k S_k N_k†`, pointwise.
pub fn propagate_point(s_in: &Mat2, t: &Mat2, channels: &[(Mat2, Mat2)]) -> Mat2 {
    let mut out = t * s_in * t.adjoint();
    for (n, s) in channels {
        out += n * s * n.adjoint();
    }
    out
}

/// Grid-wide spectral propagation through `t` plus extra channels.
pub fn propagate(s_in: &SpectralDensity, t: &QuadratureTransfer, channels: &[Channel]) -> Result<SpectralDensity> {
    let n = s_in.len();
    let mismatch = |found| Error::GridMismatch { expected: n, found };
    if t.len() != n {
        return Err(mismatch(t.len()));
    }
    for ch in channels {
        if ch.transfer.len() != n {
            return Err(mismatch(ch.transfer.len()));
        }
        if ch.source.len() != n {
            return Err(mismatch(ch.source.len()));
        }
    }
    let values = (0..n)
        .map(|i| {
            let extra: Vec<(Mat2, Mat2)> = channels.iter().map(|c| (c.transfer.values()[i], c.source.values()[i])).collect();
            propagate_point(&s_in.values()[i], &t.values()[i], &extra)
        })
        .collect();
    Ok(SpectralDensity { values })
}

/// Power loss `eps`: scales `t` by √(1−ε) and returns the vacuum channel
/// entering with amplitude √ε (none when ε = 0).
pub fn mix_loss(t: &QuadratureTransfer, eps: f64) -> Result<(QuadratureTransfer, Option<Channel>)> {
    check_fraction("loss", eps)?;
    if eps == 0.0 {
        return Ok((t.clone(), None));
    }
    let n = t.len();
    let coupling = Mat2::identity() * C64::from(eps.sqrt());
    let channel =
        Channel { transfer: QuadratureTransfer::repeat(n, coupling), source: SpectralDensity::repeat(n, Mat2::identity()) };
    Ok((t.scaled((1.0 - eps).sqrt()), Some(channel)))
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
    if mean > 0.0 {
        // Small eigenvalue from the determinant avoids cancellation.
        let hi = mean + rad;
        [(a * d - b.norm_sqr()) / hi, hi]
    } else {
        let lo = mean - rad;
        [lo, if lo < 0.0 { (a * d - b.norm_sqr()) / lo } else { mean + rad }]
    }
}

pub fn min_eigenvalue(m: &Mat2) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Positive-semidefinite part of a Hermitian matrix (negative eigenvalues clipped).
pub fn psd_part(m: &Mat2) -> Mat2 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let [lo, hi] = hermitian_eigenvalues(m);
    if lo >= 0.0 {
        return Mat2::new(a.into(), b, b.conj(), d.into());
    }
    if hi <= 0.0 {
        return Mat2::zeros();
    }
    // Eigenvector of the positive eigenvalue.
    let v1 = Vec2::new(b, C64::from(hi - a));
    let v2 = Vec2::new(C64::from(hi - d), b.conj());
    let v = if v1.norm_squared() >= v2.norm_squared() { v1 } else { v2 };
    let nv = v.norm_squared();
    if nv == 0.0 {
        // Diagonal with a single positive entry.
        return Mat2::new(a.max(0.0).into(), C64::default(), C64::default(), d.max(0.0).into());
    }
    v * v.adjoint() * C64::from(hi / nv)
}
