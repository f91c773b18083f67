//! Optomechanical frequency converter: two optical cavities (`a`, `c`) sharing
//! one mechanical mode `b`. Sideband fields entering cavity `a` leave through
//! cavity `c` with the same quadrature content, up to a small rotation, loss
//! and thermal contamination.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, K_B, ND_YAG_WAVELENGTH};
use crate::error::{check_fraction, check_non_negative, check_positive, Error, Result};
use crate::optics::{from_sidebands, min_eigenvalue, psd_part, squeezed_spectrum_matrix, Mat2, SqueezedState, C64};

/// Physical converter parameters. Rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmfcParams {
    pub mass: f64,
    pub mech_omega: f64,
    pub q_factor: f64,
    pub length_a: f64,
    pub length_c: f64,
    pub gamma_a: f64,
    pub gamma_c: f64,
    pub pump_power_a: f64,
    pub pump_power_c: f64,
    pub pump_wavelength: f64,
    pub temperature: f64,
    pub round_trip_loss: f64,
    pub gamma_opt_override: Option<f64>,
}

impl Default for OmfcParams {
    /// 1 mg oscillator at 1 MHz with γ_opt pinned to 1e5 rad/s.
    fn default() -> Self {
        Self {
            mass: 1e-6,
            mech_omega: TAU * 1e6,
            q_factor: 5e7,
            length_a: 1.0,
            length_c: 1.0,
            gamma_a: 1.5e5,
            gamma_c: 1.5e5,
            pump_power_a: 170.0,
            pump_power_c: 170.0,
            pump_wavelength: ND_YAG_WAVELENGTH,
            temperature: 1.0,
            round_trip_loss: 1e-5,
            gamma_opt_override: Some(1e5),
        }
    }
}

impl OmfcParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("mass", self.mass)?;
        check_positive("mech_omega", self.mech_omega)?;
        check_positive("q_factor", self.q_factor)?;
        check_positive("length_a", self.length_a)?;
        check_positive("length_c", self.length_c)?;
        check_positive("gamma_a", self.gamma_a)?;
        check_positive("gamma_c", self.gamma_c)?;
        check_positive("pump_power_a", self.pump_power_a)?;
        check_positive("pump_power_c", self.pump_power_c)?;
        check_positive("pump_wavelength", self.pump_wavelength)?;
        check_non_negative("temperature", self.temperature)?;
        check_fraction("round_trip_loss", self.round_trip_loss)?;
        if let Some(g) = self.gamma_opt_override {
            check_positive("gamma_opt_override", g)?;
        }
        Ok(())
    }

    /// Amplitude damping γ_m = ω_m/(2Q_m).
    pub fn mech_damping(&self) -> f64 {
        self.mech_omega / (2.0 * self.q_factor)
    }

    /// Resolved-sideband diagnostic (γ_a/ω_m, γ_c/ω_m).
    pub fn sideband_ratios(&self) -> (f64, f64) {
        (self.gamma_a / self.mech_omega, self.gamma_c / self.mech_omega)
    }

    pub fn mean_gamma(&self) -> f64 {
        0.5 * (self.gamma_a + self.gamma_c)
    }

    pub fn mean_length(&self) -> f64 {
        0.5 * (self.length_a + self.length_c)
    }

    /// High-temperature occupation n̄ = k_B T/(ħω_m).
    pub fn thermal_occupation(&self) -> f64 {
        K_B * self.temperature / (HBAR * self.mech_omega)
    }

    /// ε₁ = γ/(2ω_m): the low-frequency rotation of the exact conversion rate.
    pub fn rotation_epsilon(&self) -> f64 {
        self.mean_gamma() / (2.0 * self.mech_omega)
    }
}

/// Linearised coupling and optical damping rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmfcRates {
    pub x_zpf: f64,
    pub coupling_a: f64,
    pub coupling_c: f64,
    pub gamma_opt_a: f64,
    pub gamma_opt_c: f64,
    /// True when the rates come from `gamma_opt_override`.
    pub overridden: bool,
}

impl OmfcRates {
    /// Common γ_opt; fails unless both cavities are matched.
    pub fn matched_gamma_opt(&self) -> Result<f64> {
        let (a, c) = (self.gamma_opt_a, self.gamma_opt_c);
        if (a - c).abs() <= 1e-12 * a.abs().max(c.abs()) {
            Ok(0.5 * (a + c))
        } else {
            Err(Error::UnmatchedRates { gamma_a: a, gamma_c: c })
        }
    }
}

pub fn derive_rates(p: &OmfcParams) -> Result<OmfcRates> {
    p.validate()?;
    let x_zpf = (HBAR / (2.0 * p.mass * p.mech_omega)).sqrt();
    if let Some(g) = p.gamma_opt_override {
        return Ok(OmfcRates {
            x_zpf,
            coupling_a: (g * p.gamma_a).sqrt(),
            coupling_c: (g * p.gamma_c).sqrt(),
            gamma_opt_a: g,
            gamma_opt_c: g,
            overridden: true,
        });
    }
    let omega_pump = TAU * C / p.pump_wavelength;
    let coupling = |power: f64, length: f64| {
        let photons = power * (2.0 * length / C) / (HBAR * omega_pump);
        omega_pump / length * photons.sqrt() * x_zpf
    };
    let coupling_a = coupling(p.pump_power_a, p.length_a);
    let coupling_c = coupling(p.pump_power_c, p.length_c);
    Ok(OmfcRates {
        x_zpf,
        coupling_a,
        coupling_c,
        gamma_opt_a: coupling_a * coupling_a / p.gamma_a,
        gamma_opt_c: coupling_c * coupling_c / p.gamma_c,
        overridden: false,
    })
}

/// Adiabatic two-port scattering, ordered (c_in, a_in) → (c_out, a_out).
pub fn adiabatic_in_out(r: &OmfcRates, omega: f64) -> Result<Mat2> {
    let (ga, gc) = (r.gamma_opt_a, r.gamma_opt_c);
    let sum = ga + gc;
    if sum.is_nan() || sum <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma_opt",
            value: sum,
            reason: "optical damping rates must not both vanish",
        });
    }
    let den = C64::new(sum, -omega);
    let cross = C64::from(2.0 * (ga * gc).sqrt()) / den;
    Ok(Mat2::new(C64::new(ga - gc, -omega) / den, cross, cross, C64::new(gc - ga, -omega) / den))
}

/// Small-Ω approximation `[[−iΩ/2γ_opt, 1], [1, −iΩ/2γ_opt]]`.
pub fn ideal_conversion(r: &OmfcRates, omega: f64) -> Result<Mat2> {
    let g = r.matched_gamma_opt()?;
    let d = C64::new(0.0, -omega / (2.0 * g));
    Ok(Mat2::new(d, C64::from(1.0), C64::from(1.0), d))
}

/// Coefficients coupling the mechanical bath into the two output ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalCoefficients {
    pub into_c: C64,
    pub into_a: C64,
}

pub fn thermal_channel(r: &OmfcRates, gamma_m: f64, omega: f64) -> Result<ThermalCoefficients> {
    check_non_negative("gamma_m", gamma_m)?;
    let den = C64::new(r.gamma_opt_a + r.gamma_opt_c, -omega);
    let i2 = C64::new(0.0, 2.0);
    Ok(ThermalCoefficients {
        into_c: i2 * (gamma_m * r.gamma_opt_c).sqrt() / den,
        into_a: -i2 * (gamma_m * r.gamma_opt_a).sqrt() / den,
    })
}

/// Exact linear response without adiabatic elimination, ordered
/// (a_in, c_in, b_th) → (a_out, c_out, b_out).
pub fn full_three_mode_solve(p: &OmfcParams, r: &OmfcRates, omega: f64) -> Result<Matrix3<C64>> {
    let gm = p.mech_damping();
    let i = C64::i();
    let (ga, gc) = (r.coupling_a, r.coupling_c);
    let z = C64::default();
    let a = Matrix3::new(
        C64::new(p.gamma_a, -omega),
        z,
        i * ga,
        z,
        C64::new(p.gamma_c, -omega),
        -i * gc,
        i * ga,
        -i * gc,
        C64::new(gm, -omega),
    );
    let k = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        C64::from((2.0 * p.gamma_a).sqrt()),
        C64::from((2.0 * p.gamma_c).sqrt()),
        C64::from((2.0 * gm).sqrt()),
    ));
    let inv = a.lu().try_inverse().ok_or(Error::Singular { omega })?;
    let s = k * inv * k - Matrix3::identity();
    if s.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(s)
    } else {
        Err(Error::Singular { omega })
    }
}

/// Small parameters (ε₁, ε₂, ε₃) = (γ/2ω_m, Ω/2ω_m, Ω/γ).
pub fn expansion_parameters(p: &OmfcParams, omega: f64) -> (f64, f64, f64) {
    let g = p.mean_gamma();
    (g / (2.0 * p.mech_omega), omega / (2.0 * p.mech_omega), omega / g)
}

/// Exact conversion rate c_out/a_in including counter-rotating corrections.
pub fn exact_conversion_rate(p: &OmfcParams, r: &OmfcRates, omega: f64) -> Result<C64> {
    let g = r.matched_gamma_opt()?;
    let (e1, e2, e3) = expansion_parameters(p, omega);
    Ok(conversion_rate_from_eps(g, omega, e1, e2, e3))
}

/// Exact conversion rate written in terms of the small parameters.
pub fn conversion_rate_from_eps(gamma_opt: f64, omega: f64, e1: f64, e2: f64, e3: f64) -> C64 {
    let s = C64::new(1.0 + e2, e1);
    let w = C64::new(1.0, -e3);
    let num = s * gamma_opt / (w * w);
    let den = C64::new(0.0, -omega) * s + C64::from(gamma_opt) / w;
    num / den
}

/// First-order expansion of [`exact_conversion_rate`] in ε₁, ε₂, ε₃.
pub fn conversion_rate_leading_order(p: &OmfcParams, r: &OmfcRates, omega: f64) -> Result<C64> {
    let g = r.matched_gamma_opt()?;
    let (e1, e2, e3) = expansion_parameters(p, omega);
    Ok(leading_order_from_eps(g, omega, e1, e2, e3))
}

pub fn leading_order_from_eps(gamma_opt: f64, omega: f64, e1: f64, e2: f64, e3: f64) -> C64 {
    let den = C64::new(gamma_opt, -omega);
    let lor = C64::from(gamma_opt) / den;
    let rot = lor * C64::new(e2, e1);
    let shift = C64::new(2.0 * omega, gamma_opt) / den * e3;
    lor * (C64::from(1.0) + rot + shift)
}

/// Effective power loss ε_OMFC(Ω) from intracavity round-trip loss.
pub fn effective_loss(p: &OmfcParams, r: &OmfcRates, omega: f64) -> Result<f64> {
    let g = r.matched_gamma_opt()?;
    let eps = C * p.round_trip_loss / (p.mean_length() * p.mean_gamma()) * lorentzian(g, omega);
    if eps < 1.0 {
        Ok(eps)
    } else {
        Err(Error::InvalidParameter {
            name: "round_trip_loss",
            value: p.round_trip_loss,
            reason: "effective converter loss reaches unity",
        })
    }
}

/// Vacuum-referenced thermal noise spectrum S_th(Ω).
pub fn thermal_noise_spectrum(p: &OmfcParams, r: &OmfcRates, omega: f64) -> Result<f64> {
    let g = r.matched_gamma_opt()?;
    Ok(8.0 * K_B * p.temperature / (HBAR * g * p.q_factor) * lorentzian(g, omega))
}

fn lorentzian(g: f64, omega: f64) -> f64 {
    g * g / (g * g + omega * omega)
}

/// Fidelity level for the converter's quadrature transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionModel {
    /// Perfect swap: identity transfer.
    Ideal,
    /// Two-port adiabatic scattering.
    Adiabatic,
    /// Exact rate with counter-rotating corrections.
    Exact,
}

impl ConversionModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ConversionModel::Ideal => "ideal",
            ConversionModel::Adiabatic => "adiabatic",
            ConversionModel::Exact => "exact",
        }
    }
}

/// How mechanical thermal noise enters the converted field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalModel {
    /// Isotropic S_th(Ω) from the low-frequency estimate.
    Spectrum,
    /// Bath propagated through the thermal coefficients with weight 2n̄+1.
    Channel,
}

impl ThermalModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ThermalModel::Spectrum => "spectrum",
            ThermalModel::Channel => "channel",
        }
    }
}

/// Quadrature picture of one pass through the converter (a → c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionStage {
    /// Signal transfer acting on the incoming quadratures.
    pub transfer: Mat2,
    /// Vacuum noise added to keep the map physical (from the idle port).
    pub completion: Mat2,
}

pub fn conversion_stage(p: &OmfcParams, r: &OmfcRates, model: ConversionModel, omega: f64) -> Result<ConversionStage> {
    let transfer = match model {
        ConversionModel::Ideal => return Ok(ConversionStage { transfer: Mat2::identity(), completion: Mat2::zeros() }),
        ConversionModel::Adiabatic => {
            let up = adiabatic_in_out(r, omega)?[(0, 1)];
            let lo = adiabatic_in_out(r, -omega)?[(0, 1)];
            from_sidebands(up, lo)
        }
        ConversionModel::Exact => from_sidebands(exact_conversion_rate(p, r, omega)?, exact_conversion_rate(p, r, -omega)?),
    };
    let completion = psd_part(&(Mat2::identity() - transfer * transfer.adjoint()));
    Ok(ConversionStage { transfer, completion })
}

/// Thermal noise added to the converted field (vacuum units).
pub fn thermal_added_noise(p: &OmfcParams, r: &OmfcRates, model: ThermalModel, omega: f64) -> Result<Mat2> {
    match model {
        ThermalModel::Spectrum => Ok(Mat2::identity() * C64::from(thermal_noise_spectrum(p, r, omega)?)),
        ThermalModel::Channel => {
            let gm = p.mech_damping();
            let up = thermal_channel(r, gm, omega)?.into_c;
            let lo = thermal_channel(r, gm, -omega)?.into_c;
            let t = from_sidebands(up, lo);
            let occupation = 2.0 * p.thermal_occupation() + 1.0;
            Ok(t * t.adjoint() * C64::from(occupation))
        }
    }
}

/// Squeezing (dB, positive = below vacuum) left after one adiabatic
/// conversion with thermal and loss channels.
pub fn converted_squeeze_level(p: &OmfcParams, r: &OmfcRates, input: &SqueezedState, omega: f64) -> Result<f64> {
    let stage = conversion_stage(p, r, ConversionModel::Adiabatic, omega)?;
    let thermal = thermal_added_noise(p, r, ThermalModel::Channel, omega)?;
    let eps = effective_loss(p, r, omega)?;
    let s_in = squeezed_spectrum_matrix(input);
    let converted = stage.transfer * s_in * stage.transfer.adjoint() + stage.completion + thermal;
    let out = converted * C64::from(1.0 - eps) + Mat2::identity() * C64::from(eps);
    Ok(-crate::optics::db(min_eigenvalue(&out))?)
}

/// Which input spectrum the thermal bound is referenced to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionScheme {
    FdSqueezing { r: f64 },
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Marginal,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Marginal => "MARGINAL",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Ratio thresholds reading "T/Q_m ≪ bound".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub pass: f64,
    pub marginal: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { pass: 0.1, marginal: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionReport {
    pub gamma_opt: f64,
    pub reference_spectrum: f64,
    pub t_over_q: f64,
    /// ħγ_opt S_ref/k_B in kelvin.
    pub bound: f64,
    pub ratio: f64,
    pub verdict: Verdict,
}

pub fn thermal_criterion(
    p: &OmfcParams,
    r: &OmfcRates,
    scheme: CriterionScheme,
    thresholds: Thresholds,
) -> Result<CriterionReport> {
    let gamma_opt = r.matched_gamma_opt()?;
    let reference_spectrum = match scheme {
        CriterionScheme::FdSqueezing { r } => (-2.0 * r).exp(),
        CriterionScheme::Variational => 1.0,
    };
    let t_over_q = p.temperature / p.q_factor;
    let bound = HBAR * gamma_opt * reference_spectrum / K_B;
    let ratio = t_over_q / bound;
    let verdict = if ratio <= thresholds.pass {
        Verdict::Pass
    } else if ratio <= thresholds.marginal {
        Verdict::Marginal
    } else {
        Verdict::Fail
    };
    Ok(CriterionReport { gamma_opt, reference_spectrum, t_over_q, bound, ratio, verdict })
}
