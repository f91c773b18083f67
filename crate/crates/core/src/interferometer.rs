//! Main interferometer in the two-photon picture plus the detuned filter cavity.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, ND_YAG_WAVELENGTH};
use crate::error::{check_fraction, check_frequency, check_positive, Error, Result};
use crate::optics::{from_sidebands, Channel, FrequencyGrid, Mat2, QuadratureTransfer, RowVec2, SpectralDensity, Vec2, C64};

/// Sideband frequency (2π·3.1 Hz) and κ² target used to fix the default bandwidth.
pub const CALIBRATION_OMEGA: f64 = TAU * 3.1;
pub const CALIBRATION_KAPPA_SQ: f64 = 4.5e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfoParams {
    pub mass: f64,
    pub arm_length: f64,
    pub arm_power: f64,
    pub carrier_omega: f64,
    /// Effective detector half-bandwidth γ_ifo.
    pub bandwidth: f64,
    pub itm_transmission: f64,
    pub srm_transmission: f64,
    pub circulator_loss: f64,
    pub external_loss: f64,
    /// Converter frequency separation (bookkeeping only).
    pub frequency_offset: f64,
}

impl Default for IfoParams {
    /// 40 kg / 4 km / 800 kW detector with the calibrated bandwidth.
    fn default() -> Self {
        let mut p = Self {
            mass: 40.0,
            arm_length: 4000.0,
            arm_power: 8e5,
            carrier_omega: TAU * C / ND_YAG_WAVELENGTH,
            bandwidth: 1.0,
            itm_transmission: 0.014,
            srm_transmission: 0.35,
            circulator_loss: 0.005,
            external_loss: 0.005,
            frequency_offset: TAU * 15e6,
        };
        p.bandwidth = calibrate_bandwidth(&p, CALIBRATION_OMEGA, CALIBRATION_KAPPA_SQ)
            .expect("default interferometer admits a calibrated bandwidth");
        p
    }
}

impl IfoParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("mass", self.mass)?;
        check_positive("arm_length", self.arm_length)?;
        check_positive("arm_power", self.arm_power)?;
        check_positive("carrier_omega", self.carrier_omega)?;
        check_positive("bandwidth", self.bandwidth)?;
        check_fraction("itm_transmission", self.itm_transmission)?;
        check_fraction("srm_transmission", self.srm_transmission)?;
        check_fraction("circulator_loss", self.circulator_loss)?;
        check_fraction("external_loss", self.external_loss)?;
        Ok(())
    }

    /// Scale K with κ = Kγ/(Ω²(Ω²+γ²)).
    pub fn ponderomotive_scale(&self) -> f64 {
        16.0 * self.carrier_omega * self.arm_power / (self.mass * self.arm_length * C)
    }

    /// Bare arm-cavity half-bandwidth T_ITM·c/(4L).
    pub fn arm_bandwidth(&self) -> f64 {
        self.itm_transmission * C / (4.0 * self.arm_length)
    }
}

/// Bandwidth giving κ²(ω_cal) = `kappa_sq`; the larger of the two roots.
pub fn calibrate_bandwidth(p: &IfoParams, omega_cal: f64, kappa_sq: f64) -> Result<f64> {
    check_frequency(omega_cal)?;
    let kt = check_positive("kappa_sq", kappa_sq)?.sqrt();
    let k = p.ponderomotive_scale();
    let w2 = omega_cal * omega_cal;
    let disc = k * k - 4.0 * kt * kt * w2 * w2 * w2;
    if disc < 0.0 {
        return Err(Error::InvalidParameter {
            name: "kappa_sq",
            value: kappa_sq,
            reason: "target exceeds the maximum reachable coupling",
        });
    }
    Ok((k + disc.sqrt()) / (2.0 * kt * w2))
}

/// Detuned single-cavity filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub detuning: f64,
    pub half_bandwidth: f64,
}

impl FilterParams {
    pub fn new(detuning: f64, half_bandwidth: f64) -> Result<Self> {
        let f = Self { detuning, half_bandwidth };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("half_bandwidth", self.half_bandwidth)?;
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter { name: "detuning", value: self.detuning, reason: "must be finite" });
        }
        Ok(())
    }
}

pub fn kimble_kappa(p: &IfoParams, omega: f64) -> Result<f64> {
    let w = check_frequency(omega)?;
    let g = p.bandwidth;
    Ok(p.ponderomotive_scale() * g / (w * w * (w * w + g * g)))
}

/// Strain-referenced SQL PSD 8ħ/(MΩ²L²), 1/Hz.
pub fn sql_psd(p: &IfoParams, omega: f64) -> Result<f64> {
    let w = check_frequency(omega)?;
    Ok(8.0 * HBAR / (p.mass * w * w * p.arm_length * p.arm_length))
}

/// Signal phase β = arctan(Ω/γ_ifo).
pub fn propagation_phase(p: &IfoParams, omega: f64) -> f64 {
    (omega / p.bandwidth).atan()
}

/// In/out transfer of the lossless interferometer and its signal vector
/// (per unit h/h_SQL).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfoResponse {
    pub transfer: Mat2,
    pub signal: Vec2,
    pub kappa: f64,
}

pub fn ifo_in_out(p: &IfoParams, omega: f64) -> Result<IfoResponse> {
    let kappa = kimble_kappa(p, omega)?;
    let beta = propagation_phase(p, omega);
    let e2 = C64::from_polar(1.0, 2.0 * beta);
    let transfer = Mat2::new(e2, C64::default(), -e2 * kappa, e2);
    let signal = Vec2::new(C64::default(), C64::from_polar((2.0 * kappa).sqrt(), beta));
    Ok(IfoResponse { transfer, signal, kappa })
}

/// Lossy in/out: transfer and signal scaled by √(1−ε); vacuum enters with √ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossyIfoResponse {
    pub transfer: Mat2,
    pub signal: Vec2,
    pub kappa: f64,
    pub vacuum_coupling: f64,
}

pub fn lossy_ifo_in_out(p: &IfoParams, omega: f64, eps: f64) -> Result<LossyIfoResponse> {
    check_fraction("loss", eps)?;
    let r = ifo_in_out(p, omega)?;
    let t = C64::from((1.0 - eps).sqrt());
    Ok(LossyIfoResponse { transfer: r.transfer * t, signal: r.signal * t, kappa: r.kappa, vacuum_coupling: eps.sqrt() })
}

/// Homodyne angle θ_vr = arctan κ that cancels the back-action term.
pub fn variational_angle(p: &IfoParams, omega: f64) -> Result<f64> {
    Ok(kimble_kappa(p, omega)?.atan())
}

/// Row vector projecting (b₁, b₂) onto b_θ = b₁ sinθ + b₂ cosθ.
pub fn homodyne_vector(theta: f64) -> RowVec2 {
    let (s, c) = theta.sin_cos();
    RowVec2::new(s.into(), c.into())
}

/// Unit readout row for θ_vr = arctan κ, built from κ directly so the
/// back-action coefficient cancels to rounding.
pub fn variational_homodyne_vector(kappa: f64) -> RowVec2 {
    let c = 1.0 / (1.0 + kappa * kappa).sqrt();
    RowVec2::new((kappa * c).into(), c.into())
}

/// Strain PSD read out at angle θ from an output spectrum and signal vector.
pub fn homodyne_strain_psd(sql: f64, noise: &Mat2, signal: &Vec2, theta: f64, omega: f64) -> Result<f64> {
    let h = homodyne_vector(theta);
    let n = (h * noise * h.adjoint())[(0, 0)].re;
    Ok(sql * n / signal_power(&h, signal, omega)?)
}

fn signal_power(row: &RowVec2, signal: &Vec2, omega: f64) -> Result<f64> {
    let sig = (row * signal)[(0, 0)].norm_sqr();
    if sig > 1e-30 * signal.norm_squared() && sig > 0.0 {
        Ok(sig)
    } else {
        Err(Error::SignalNulled { omega })
    }
}

/// Input spectrum, transfer, extra channels and signal response sampled on a grid.
#[derive(Debug, Clone, Copy)]
pub struct ReadoutChain<'a> {
    pub input: &'a SpectralDensity,
    pub transfer: &'a QuadratureTransfer,
    pub channels: &'a [Channel],
    pub signal: &'a [Vec2],
}

/// Homodyne angle per grid point.
#[derive(Debug, Clone, Copy)]
pub enum HomodyneAngle<'a> {
    Variational,
    Fixed(f64),
    PerPoint(&'a [f64]),
}

/// Strain-referenced PSD of a readout chain.
///
/// The homodyne row is pushed back through each transfer before the spectra
/// are contracted, which keeps the back-action cancellation at large κ exact
/// to rounding instead of subtracting two O(κ²) numbers.
pub fn homodyne_readout(
    p: &IfoParams,
    grid: &FrequencyGrid,
    chain: ReadoutChain<'_>,
    angle: HomodyneAngle<'_>,
) -> Result<Vec<f64>> {
    let n = grid.len();
    let mut lens = vec![chain.input.len(), chain.transfer.len(), chain.signal.len()];
    for c in chain.channels {
        lens.push(c.transfer.len());
        lens.push(c.source.len());
    }
    if let HomodyneAngle::PerPoint(t) = angle {
        lens.push(t.len());
    }
    if let Some(&bad) = lens.iter().find(|&&l| l != n) {
        return Err(Error::GridMismatch { expected: n, found: bad });
    }
    grid.omegas()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let row = match angle {
                HomodyneAngle::Variational => variational_homodyne_vector(kimble_kappa(p, w)?),
                HomodyneAngle::Fixed(t) => homodyne_vector(t),
                HomodyneAngle::PerPoint(t) => homodyne_vector(t[i]),
            };
            let contract = |t: &Mat2, s: &Mat2| {
                let r = row * t;
                (r * s * r.adjoint())[(0, 0)].re
            };
            let mut noise = contract(&chain.transfer.values()[i], &chain.input.values()[i]);
            for c in chain.channels {
                noise += contract(&c.transfer.values()[i], &c.source.values()[i]);
            }
            Ok(sql_psd(p, w)? * noise / signal_power(&row, &chain.signal[i], w)?)
        })
        .collect()
}

/// Closed-form variational-readout sensitivity with loss ε.
pub fn loss_limited_sensitivity(p: &IfoParams, omega: f64, eps: f64) -> Result<f64> {
    check_fraction("loss", eps)?;
    let kappa = kimble_kappa(p, omega)?;
    let cos2 = 1.0 / (1.0 + kappa * kappa);
    Ok(sql_psd(p, omega)? / (2.0 * kappa) * (1.0 + eps / ((1.0 - eps) * cos2)))
}

/// Back-action leaking through a small homodyne angle error δθ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleErrorNoise {
    /// (1+κ²)δθ², in vacuum units of the readout quadrature.
    pub quadrature_variance: f64,
    /// cos²θ_vr: the shot-noise floor in the same units.
    pub shot_floor: f64,
    /// Strain-referenced PSD, 1/Hz.
    pub strain_psd: f64,
}

pub fn angle_error_noise(p: &IfoParams, omega: f64, delta_theta: f64) -> Result<AngleErrorNoise> {
    if delta_theta.is_nan() || delta_theta.abs() >= 0.1 {
        return Err(Error::AngleTooLarge(delta_theta));
    }
    let kappa = kimble_kappa(p, omega)?;
    let k2 = 1.0 + kappa * kappa;
    let quadrature_variance = k2 * delta_theta * delta_theta;
    let shot_floor = 1.0 / k2;
    let strain_psd = sql_psd(p, omega)? * quadrature_variance / (2.0 * kappa * shot_floor);
    Ok(AngleErrorNoise { quadrature_variance, shot_floor, strain_psd })
}

/// Phase ξ with tan ξ = 2Ωγ/(Δ² − Ω² + γ²).
///
/// This is the half-difference of the two sideband reflection phases of the
/// detuned cavity, i.e. the phase common to the rotated quadrature pair. The
/// rotation the cavity applies to the quadratures themselves is
/// [`filter_quadrature_rotation`].
pub fn filter_rotation_angle(f: &FilterParams, omega: f64) -> f64 {
    let (d, g) = (f.detuning, f.half_bandwidth);
    (2.0 * omega * g).atan2(d * d - omega * omega + g * g)
}

/// Amplitude reflection of the detuned cavity for a sideband at offset Ω.
pub fn cavity_sideband_reflection(f: &FilterParams, omega: f64) -> C64 {
    let x = omega - f.detuning;
    C64::new(f.half_bandwidth, x) / C64::new(f.half_bandwidth, -x)
}

/// Quadrature transfer of the detuned cavity.
pub fn filter_transfer(f: &FilterParams, omega: f64) -> Mat2 {
    from_sidebands(cavity_sideband_reflection(f, omega), cavity_sideband_reflection(f, -omega))
}

/// Quadrature rotation applied by the detuned cavity; even in Ω and
/// vanishing far outside the linewidth. With Δ = −γ it equals arctan(2γ²/Ω²).
pub fn filter_quadrature_rotation(f: &FilterParams, omega: f64) -> f64 {
    let (d, g) = (f.detuning, f.half_bandwidth);
    -(2.0 * d * g).atan2(g * g + omega * omega - d * d)
}

/// First-order rotation shift δξ ≈ δΔ/(Ωγ_f) from a detuning change δΔ.
pub fn detuning_compensation(delta_detuning: f64, omega: f64, half_bandwidth: f64) -> Result<f64> {
    let w = check_frequency(omega)?;
    let g = check_positive("half_bandwidth", half_bandwidth)?;
    Ok(delta_detuning / (w * g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{mix_loss, rotation_angle, Spacing};
    use proptest::prelude::*;

    #[test]
    fn calibration_hits_target() {
        let p = IfoParams::default();
        let k = kimble_kappa(&p, CALIBRATION_OMEGA).unwrap();
        assert!((k * k - 4.5e4).abs() < 1e-6 * 4.5e4);
        assert!((p.bandwidth - 5869.9).abs() < 1.0, "{}", p.bandwidth);
        assert!((p.arm_bandwidth() - 262.3).abs() < 0.1);
    }

    #[test]
    fn kappa_scaling() {
        let p = IfoParams::default();
        let w = 1e4;
        let k1 = kimble_kappa(&p, w).unwrap();
        let k2 = kimble_kappa(&IfoParams { arm_power: 2.0 * p.arm_power, ..p }, w).unwrap();
        assert!((k2 / k1 - 2.0).abs() < 1e-12);
        let far = kimble_kappa(&p, 1e7).unwrap() / kimble_kappa(&p, 2e7).unwrap();
        assert!((far - 16.0).abs() < 1e-3);
        assert!(kimble_kappa(&p, 0.0).is_err());
    }

    #[test]
    fn sql_value() {
        let p = IfoParams::default();
        let s = sql_psd(&p, TAU * 100.0).unwrap();
        let oracle = 8.0 * 1.054571817e-34 / (40.0 * (TAU * 100.0).powi(2) * 4000f64.powi(2));
        assert!((s - oracle).abs() < 1e-60);
        assert!((s - 3.34e-48).abs() < 0.01e-48);
        assert!((sql_psd(&IfoParams { mass: 160.0, ..p }, 1.0).unwrap() * 4.0 - sql_psd(&p, 1.0).unwrap()).abs() < 1e-50);
    }

    #[test]
    fn in_out_is_lossless_and_vacuum_noise() {
        let p = IfoParams::default();
        for w in [1.0, 30.0, 3000.0] {
            let r = ifo_in_out(&p, w).unwrap();
            assert!((r.transfer.determinant().norm() - 1.0).abs() < 1e-12);
            let out = r.transfer * r.transfer.adjoint();
            assert!((out[(1, 1)].re - (1.0 + r.kappa * r.kappa)).abs() < 1e-9 * (1.0 + r.kappa * r.kappa));
        }
    }

    #[test]
    fn variational_angle_nulls_backaction() {
        let p = IfoParams::default();
        for w in [1.0, 20.0, 300.0, 5000.0] {
            let r = ifo_in_out(&p, w).unwrap();
            let row = variational_homodyne_vector(r.kappa) * r.transfer;
            assert!(row[(0, 0)].norm() < 1e-15);
            let th = variational_angle(&p, w).unwrap();
            assert!((homodyne_vector(th) - variational_homodyne_vector(r.kappa)).norm() < 1e-12);
        }
        let c2 = 1.0 / (1.0 + 4.5e4);
        let th = variational_angle(&IfoParams::default(), CALIBRATION_OMEGA).unwrap();
        assert!((th.cos().powi(2) - c2).abs() < 1e-9);
    }

    #[test]
    fn nulled_signal_rejected() {
        let p = IfoParams::default();
        let r = ifo_in_out(&p, 100.0).unwrap();
        let e = homodyne_strain_psd(1.0, &Mat2::identity(), &r.signal, std::f64::consts::FRAC_PI_2, 100.0);
        assert!(matches!(e, Err(Error::SignalNulled { .. })));
    }

    #[test]
    fn phase_readout_touches_sql_once() {
        let p = IfoParams::default();
        let grid = FrequencyGrid::new(1.0, 1000.0, 400, Spacing::Logarithmic).unwrap();
        let mut below = 0;
        for &w in grid.omegas() {
            let r = ifo_in_out(&p, w).unwrap();
            let s =
                homodyne_strain_psd(sql_psd(&p, w).unwrap(), &(r.transfer * r.transfer.adjoint()), &r.signal, 0.0, w).unwrap();
            let sql = sql_psd(&p, w).unwrap();
            let oracle = (1.0 + r.kappa * r.kappa) * sql / (2.0 * r.kappa);
            assert!((s - oracle).abs() < 1e-9 * oracle);
            assert!(s >= sql * (1.0 - 1e-12));
            if (s / sql - 1.0) < 1e-4 {
                below += 1;
            }
        }
        assert!(below <= 2);
    }

    #[test]
    fn closed_form_loss_matches_pipeline() {
        let p = IfoParams::default();
        let grid = FrequencyGrid::new(1.0, 1000.0, 50, Spacing::Logarithmic).unwrap();
        for eps in [0.0, 0.005, 0.05] {
            let t = QuadratureTransfer::try_from_fn(&grid, |w| Ok(ifo_in_out(&p, w)?.transfer)).unwrap();
            let (t, ch) = mix_loss(&t, eps).unwrap();
            let chans: Vec<Channel> = ch.into_iter().collect();
            let sig: Vec<Vec2> = grid.omegas().iter().map(|&w| lossy_ifo_in_out(&p, w, eps).unwrap().signal).collect();
            let vac = SpectralDensity::vacuum(&grid);
            let chain = ReadoutChain { input: &vac, transfer: &t, channels: &chans, signal: &sig };
            let s = homodyne_readout(&p, &grid, chain, HomodyneAngle::Variational).unwrap();
            for (i, &w) in grid.omegas().iter().enumerate() {
                let cf = loss_limited_sensitivity(&p, w, eps).unwrap();
                assert!((s[i] - cf).abs() < 1e-10 * cf, "{eps} {w} {}", s[i] / cf - 1.0);
            }
        }
    }

    #[test]
    fn angle_error_scaling() {
        let p = IfoParams::default();
        assert_eq!(angle_error_noise(&p, 10.0, 0.0).unwrap().strain_psd, 0.0);
        let a = angle_error_noise(&p, CALIBRATION_OMEGA, 1e-5).unwrap();
        assert!((a.quadrature_variance - 4.5e-6).abs() < 1e-9);
        let b = angle_error_noise(&p, CALIBRATION_OMEGA, 2e-5).unwrap();
        assert!((b.strain_psd / a.strain_psd - 4.0).abs() < 1e-12);
        assert!(angle_error_noise(&p, 10.0, 0.2).is_err());
    }

    #[test]
    fn filter_angle_special_values() {
        let f = FilterParams::new(3.0, 4.0).unwrap();
        assert_eq!(filter_rotation_angle(&f, 0.0), 0.0);
        let w = (9.0f64 + 16.0).sqrt();
        assert!((filter_rotation_angle(&f, w) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(FilterParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn sideband_phase_difference_reproduces_filter_angle() {
        let f = FilterParams::new(-7.0, 5.0).unwrap();
        for w in [0.5, 3.0, 11.0, 40.0] {
            let up = cavity_sideband_reflection(&f, w).arg();
            let lo = cavity_sideband_reflection(&f, -w).arg();
            let half = 0.5 * (up - lo);
            let xi = filter_rotation_angle(&f, w);
            assert!((half.tan() - xi.tan()).abs() < 1e-9 * (1.0 + xi.tan().abs()));
        }
    }

    #[test]
    fn cavity_rotation_matches_transfer() {
        let f = FilterParams::new(-30.0, 30.0).unwrap();
        for w in [1.0, 10.0, 30.0, 300.0] {
            let m = filter_transfer(&f, w);
            assert!((m * m.adjoint() - Mat2::identity()).norm() < 1e-12);
            assert!((rotation_angle(&m) - filter_quadrature_rotation(&f, w)).abs() < 1e-12);
            let oracle = (2.0 * 900.0 / (w * w)).atan();
            assert!((filter_quadrature_rotation(&f, w) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn compensation_is_linear() {
        assert_eq!(detuning_compensation(0.0, 1.0, 1.0).unwrap(), 0.0);
        let a = detuning_compensation(0.01, TAU, 3.0).unwrap();
        let b = detuning_compensation(0.02, TAU, 3.0).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-18);
        assert!(detuning_compensation(1.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn filter_angle_monotone_below_resonance(d in -50.0f64..50.0, g in 0.1f64..50.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let f = FilterParams::new(d, g).unwrap();
            let top = (d * d + g * g).sqrt();
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            prop_assume!(b - a > 1e-6);
            prop_assert!(filter_rotation_angle(&f, a * top) <= filter_rotation_angle(&f, b * top) + 1e-12);
        }

        #[test]
        fn lossless_determinant_unit(w in 0.1f64..1e5) {
            let r = ifo_in_out(&IfoParams::default(), w).unwrap();
            prop_assert!((r.transfer.determinant().norm() - 1.0).abs() < 1e-12);
        }
    }
}
