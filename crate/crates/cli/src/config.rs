//! TOML run configuration.
//!
//! Every key carries its unit in its name. Ordinary frequencies are in Hz;
//! the converter and detector decay rates keep rad/s. Missing keys take the
//! reference design values and unknown keys are rejected.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use omfc_core::constants::C;
use omfc_core::interferometer::{calibrate_bandwidth, CALIBRATION_KAPPA_SQ, CALIBRATION_OMEGA};
use omfc_core::omfc::{derive_rates, ConversionModel, ThermalModel, Thresholds};
use omfc_core::schemes::{FilterPolicy, ReadoutPolicy};
use omfc_core::tuning::{calibrate_filter, FreeVar, FreeVariable, Objective};
use omfc_core::{FilterParams, FrequencyGrid, IfoParams, OmfcParams, SchemeConfig, SchemeMode, Spacing, SqueezedState, TuneSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a number or one of the documented keywords")]
pub enum NumberOr<K> {
    Value(f64),
    Keyword(K),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoneKw {
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaOptKw {
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthKw {
    Calibrated,
    Arm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKw {
    Auto,
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKw {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// Fit a cavity to the imperfection-free configuration at run time.
    Calibrated,
    Perfect,
    Cavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    DegradationAt,
    BandIntegrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { f_min_hz: 1.0, f_max_hz: 1000.0, points: 200, spacing: Spacing::Logarithmic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub mode: SchemeMode,
    pub squeeze_db: f64,
    pub squeeze_angle_rad: f64,
    pub squeeze_variational_input: bool,
    pub conversion: ConversionModel,
    pub thermal: ThermalModel,
    pub loss_override: NumberOr<NoneKw>,
    pub dc_offset_rad: f64,
    pub angle_jitter_rad: f64,
    pub readout: NumberOr<ReadoutKw>,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            mode: SchemeMode::VariationalReadout,
            squeeze_db: 12.0,
            squeeze_angle_rad: 0.0,
            squeeze_variational_input: false,
            conversion: ConversionModel::Exact,
            thermal: ThermalModel::Spectrum,
            loss_override: NumberOr::Keyword(NoneKw::None),
            dc_offset_rad: 0.0,
            angle_jitter_rad: 0.0,
            readout: NumberOr::Keyword(ReadoutKw::Auto),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmfcSection {
    pub mass_kg: f64,
    pub mech_freq_hz: f64,
    pub q_factor: f64,
    pub length_a_m: f64,
    pub length_c_m: f64,
    pub gamma_a_rad_s: f64,
    pub gamma_c_rad_s: f64,
    pub pump_power_a_w: f64,
    pub pump_power_c_w: f64,
    pub pump_wavelength_m: f64,
    pub temperature_k: f64,
    pub round_trip_loss: f64,
    pub gamma_opt_rad_s: NumberOr<GammaOptKw>,
}

impl Default for OmfcSection {
    fn default() -> Self {
        let p = OmfcParams::default();
        Self {
            mass_kg: p.mass,
            mech_freq_hz: p.mech_omega / TAU,
            q_factor: p.q_factor,
            length_a_m: p.length_a,
            length_c_m: p.length_c,
            gamma_a_rad_s: p.gamma_a,
            gamma_c_rad_s: p.gamma_c,
            pump_power_a_w: p.pump_power_a,
            pump_power_c_w: p.pump_power_c,
            pump_wavelength_m: p.pump_wavelength,
            temperature_k: p.temperature,
            round_trip_loss: p.round_trip_loss,
            gamma_opt_rad_s: p.gamma_opt_override.map_or(NumberOr::Keyword(GammaOptKw::Derived), NumberOr::Value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfoSection {
    pub mass_kg: f64,
    pub arm_length_m: f64,
    pub arm_power_w: f64,
    pub wavelength_m: f64,
    pub bandwidth_rad_s: NumberOr<BandwidthKw>,
    pub itm_transmission: f64,
    pub srm_transmission: f64,
    pub circulator_loss: f64,
    pub external_loss: f64,
    pub frequency_offset_hz: f64,
}

impl Default for IfoSection {
    fn default() -> Self {
        let p = IfoParams::default();
        Self {
            mass_kg: p.mass,
            arm_length_m: p.arm_length,
            arm_power_w: p.arm_power,
            wavelength_m: omfc_core::constants::ND_YAG_WAVELENGTH,
            bandwidth_rad_s: NumberOr::Keyword(BandwidthKw::Calibrated),
            itm_transmission: p.itm_transmission,
            srm_transmission: p.srm_transmission,
            circulator_loss: p.circulator_loss,
            external_loss: p.external_loss,
            frequency_offset_hz: p.frequency_offset / TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub policy: FilterKind,
    /// Used by the `cavity` policy only.
    pub detuning_hz: f64,
    pub half_bandwidth_hz: f64,
    /// Band fitted by the `calibrated` policy.
    pub calibration_f_lo_hz: f64,
    pub calibration_f_hi_hz: f64,
    pub calibration_points: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            policy: FilterKind::Calibrated,
            detuning_hz: -10.0,
            half_bandwidth_hz: 10.0,
            calibration_f_lo_hz: 1.0,
            calibration_f_hi_hz: 30.0,
            calibration_points: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionSection {
    pub pass_ratio: f64,
    pub marginal_ratio: f64,
}

impl Default for CriterionSection {
    fn default() -> Self {
        let t = Thresholds::default();
        Self { pass_ratio: t.pass, marginal_ratio: t.marginal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub vars: Vec<FreeVar>,
    pub objective: ObjectiveKind,
    pub f_ref_hz: f64,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub band_points: usize,
    pub tolerance_db: f64,
    pub max_evals: usize,
    pub scan_points: usize,
    /// `auto` spans a decade either side of the starting filter.
    pub detuning_bounds_hz: NumberOr2,
    pub half_bandwidth_bounds_hz: NumberOr2,
    pub dc_offset_bounds_rad: [f64; 2],
}

/// Explicit `[lo, hi]` pair or `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a [lo, hi] pair or \"auto\"")]
pub enum NumberOr2 {
    Pair([f64; 2]),
    Keyword(AutoKw),
}

impl Default for TuneSection {
    fn default() -> Self {
        Self {
            vars: vec![FreeVar::Detuning, FreeVar::Bandwidth, FreeVar::DcOffset],
            objective: ObjectiveKind::DegradationAt,
            f_ref_hz: 3.0,
            band_lo_hz: 1.0,
            band_hi_hz: 30.0,
            band_points: 20,
            tolerance_db: 1e-4,
            max_evals: 2000,
            scan_points: 5,
            detuning_bounds_hz: NumberOr2::Keyword(AutoKw::Auto),
            half_bandwidth_bounds_hz: NumberOr2::Keyword(AutoKw::Auto),
            dc_offset_bounds_rad: [-0.1, 0.1],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub scheme: SchemeSection,
    pub omfc: OmfcSection,
    pub ifo: IfoSection,
    pub filter: FilterSection,
    pub criterion: CriterionSection,
    pub tune: TuneSection,
}

/// Prefix of informational header keys; ignored when a header is read back.
pub const META_PREFIX: &str = "meta.";

impl RunConfig {
    /// Parses a TOML document, or the `# key = value` header of a previous
    /// output file.
    pub fn parse(text: &str) -> CliResult<Self> {
        let doc = if text.trim_start().starts_with('#') { header_document(text) } else { text.to_owned() };
        from_toml(&doc)
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("run configuration serializes to a table")
    }

    pub fn from_table(t: toml::Table) -> CliResult<Self> {
        serde_path_to_error::deserialize(t).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("`{path}`: {}", e.inner()))
        })
    }

    /// Dotted `key = value` lines in sorted order.
    pub fn dotted_lines(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        flatten("", &toml::Value::Table(self.to_table()), &mut out);
        out
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        Resolved::new(self)
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        leaf => out.push((prefix.to_owned(), format_value(leaf))),
    }
}

/// TOML literal for a leaf value; floats use the shortest exact form.
pub fn format_value(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(x) => format_float(*x),
        toml::Value::Array(a) => format!("[{}]", a.iter().map(format_value).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn header_document(text: &str) -> String {
    let mut doc = String::new();
    for line in text.lines() {
        let Some(body) = line.strip_prefix("# ") else { break };
        if body.starts_with(META_PREFIX) {
            continue;
        }
        doc.push_str(body);
        doc.push('\n');
    }
    doc
}

fn from_toml(doc: &str) -> CliResult<RunConfig> {
    let de = toml::Deserializer::parse(doc).map_err(|e| CliError::Config(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("`{path}`: {}", e.inner().message()))
    })
}

/// Fully resolved run: core configuration plus the metadata worth echoing.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub run: RunConfig,
    pub scheme: SchemeConfig,
    pub grid: FrequencyGrid,
    pub thresholds: Thresholds,
    pub meta: Vec<(String, String)>,
}

impl Resolved {
    fn new(run: &RunConfig) -> CliResult<Self> {
        let grid = FrequencyGrid::new(run.grid.f_min_hz, run.grid.f_max_hz, run.grid.points, run.grid.spacing).map_err(|e| {
            let key = match e {
                omfc_core::Error::InvalidGrid(m) if m.contains("points") => "grid.points",
                _ => "grid.f_min_hz",
            };
            CliError::Config(format!("`{key}`: {e}"))
        })?;
        let omfc = omfc_params(&run.omfc);
        omfc.validate().map_err(|e| keyed("omfc", e))?;
        let ifo = ifo_params(&run.ifo)?;
        ifo.validate().map_err(|e| keyed("ifo", e))?;

        let s = &run.scheme;
        let input_squeeze = if s.mode == SchemeMode::BaselineVacuum {
            SqueezedState::vacuum()
        } else {
            SqueezedState::from_db(s.squeeze_db, s.squeeze_angle_rad).map_err(|e| keyed("scheme", e))?
        };
        let readout = match s.readout {
            NumberOr::Keyword(ReadoutKw::Auto) if s.mode == SchemeMode::VariationalReadout => ReadoutPolicy::Variational,
            NumberOr::Keyword(ReadoutKw::Auto) => ReadoutPolicy::Fixed(0.0),
            NumberOr::Keyword(ReadoutKw::Variational) => ReadoutPolicy::Variational,
            NumberOr::Value(x) => ReadoutPolicy::Fixed(x),
        };
        let mut scheme = SchemeConfig {
            mode: s.mode,
            omfc,
            conversion: s.conversion,
            thermal: s.thermal,
            loss_override: match s.loss_override {
                NumberOr::Value(x) => Some(x),
                NumberOr::Keyword(NoneKw::None) => None,
            },
            ifo,
            filter: FilterPolicy::Perfect,
            dc_offset: s.dc_offset_rad,
            input_squeeze,
            squeeze_variational_input: s.squeeze_variational_input,
            angle_jitter: s.angle_jitter_rad,
            readout,
        };
        scheme.validate().map_err(|e| keyed("scheme", e))?;

        let rates = derive_rates(&scheme.omfc).map_err(|e| keyed("omfc", e))?;
        let mut meta = vec![
            ("meta.version".to_owned(), format!("\"{}\"", env!("CARGO_PKG_VERSION"))),
            ("meta.ifo_bandwidth_rad_s".to_owned(), format_float(scheme.ifo.bandwidth)),
            ("meta.gamma_opt_a_rad_s".to_owned(), format_float(rates.gamma_opt_a)),
            ("meta.gamma_opt_c_rad_s".to_owned(), format_float(rates.gamma_opt_c)),
            ("meta.gamma_opt_source".to_owned(), if rates.overridden { "\"override\"" } else { "\"derived\"" }.to_owned()),
        ];
        if !rates.overridden && run.omfc.pump_wavelength_m == OmfcSection::default().pump_wavelength_m {
            meta.push(("meta.pump_wavelength_assumed".to_owned(), "true".to_owned()));
        }

        let f = &run.filter;
        scheme.filter = match f.policy {
            FilterKind::Perfect => FilterPolicy::Perfect,
            FilterKind::Cavity => FilterPolicy::Cavity(
                FilterParams::new(TAU * f.detuning_hz, TAU * f.half_bandwidth_hz).map_err(|e| keyed("filter", e))?,
            ),
            FilterKind::Calibrated => {
                if f.calibration_points < 2 || !(f.calibration_f_lo_hz > 0.0 && f.calibration_f_lo_hz < f.calibration_f_hi_hz) {
                    return Err(CliError::Config(
                        "`filter.calibration_f_lo_hz`: calibration band needs 0 < lo < hi and two or more points".into(),
                    ));
                }
                let fp = calibrate_filter(&scheme, f.calibration_f_lo_hz, f.calibration_f_hi_hz, f.calibration_points)
                    .map_err(|e| keyed("filter", e))?;
                meta.push(("meta.calibrated_detuning_hz".to_owned(), format_float(fp.detuning / TAU)));
                meta.push(("meta.calibrated_half_bandwidth_hz".to_owned(), format_float(fp.half_bandwidth / TAU)));
                FilterPolicy::Cavity(fp)
            }
        };

        let thresholds = Thresholds { pass: run.criterion.pass_ratio, marginal: run.criterion.marginal_ratio };
        if !(thresholds.pass > 0.0 && thresholds.pass <= thresholds.marginal && thresholds.marginal.is_finite()) {
            return Err(CliError::Config("`criterion.pass_ratio`: thresholds need 0 < pass ≤ marginal".into()));
        }
        Ok(Self { run: run.clone(), scheme, grid, thresholds, meta })
    }

    /// Tuning request anchored at the resolved filter.
    pub fn tune_spec(&self) -> CliResult<TuneSpec> {
        let t = &self.run.tune;
        let FilterPolicy::Cavity(f0) = self.scheme.filter else {
            return Err(CliError::Config("`filter.policy`: tuning needs a cavity or calibrated filter".into()));
        };
        let decade = |x: f64| if x < 0.0 { [10.0 * x, x / 10.0] } else { [x / 10.0, 10.0 * x] };
        let bounds = |b: &NumberOr2, start: f64| match b {
            NumberOr2::Pair([lo, hi]) => [TAU * lo, TAU * hi],
            NumberOr2::Keyword(AutoKw::Auto) => decade(start),
        };
        let vars = t
            .vars
            .iter()
            .map(|&var| {
                let [lo, hi] = match var {
                    FreeVar::Detuning => bounds(&t.detuning_bounds_hz, f0.detuning),
                    FreeVar::Bandwidth => bounds(&t.half_bandwidth_bounds_hz, f0.half_bandwidth),
                    FreeVar::DcOffset => t.dc_offset_bounds_rad,
                };
                FreeVariable { var, lo, hi }
            })
            .collect();
        let objective = match t.objective {
            ObjectiveKind::DegradationAt => Objective::DegradationAt { f_ref: t.f_ref_hz },
            ObjectiveKind::BandIntegrated => {
                Objective::BandIntegrated { f_lo: t.band_lo_hz, f_hi: t.band_hi_hz, points: t.band_points }
            }
        };
        Ok(TuneSpec { vars, objective, tolerance_db: t.tolerance_db, max_evals: t.max_evals, scan_points: t.scan_points })
    }
}

fn omfc_params(s: &OmfcSection) -> OmfcParams {
    OmfcParams {
        mass: s.mass_kg,
        mech_omega: TAU * s.mech_freq_hz,
        q_factor: s.q_factor,
        length_a: s.length_a_m,
        length_c: s.length_c_m,
        gamma_a: s.gamma_a_rad_s,
        gamma_c: s.gamma_c_rad_s,
        pump_power_a: s.pump_power_a_w,
        pump_power_c: s.pump_power_c_w,
        pump_wavelength: s.pump_wavelength_m,
        temperature: s.temperature_k,
        round_trip_loss: s.round_trip_loss,
        gamma_opt_override: match s.gamma_opt_rad_s {
            NumberOr::Value(g) => Some(g),
            NumberOr::Keyword(GammaOptKw::Derived) => None,
        },
    }
}

fn ifo_params(s: &IfoSection) -> CliResult<IfoParams> {
    if !(s.wavelength_m > 0.0 && s.wavelength_m.is_finite()) {
        return Err(CliError::Config(format!("`ifo.wavelength_m`: must be finite and positive, got {}", s.wavelength_m)));
    }
    let mut p = IfoParams {
        mass: s.mass_kg,
        arm_length: s.arm_length_m,
        arm_power: s.arm_power_w,
        carrier_omega: TAU * C / s.wavelength_m,
        bandwidth: 1.0,
        itm_transmission: s.itm_transmission,
        srm_transmission: s.srm_transmission,
        circulator_loss: s.circulator_loss,
        external_loss: s.external_loss,
        frequency_offset: TAU * s.frequency_offset_hz,
    };
    p.validate().map_err(|e| keyed("ifo", e))?;
    p.bandwidth = match s.bandwidth_rad_s {
        NumberOr::Value(b) => b,
        NumberOr::Keyword(BandwidthKw::Arm) => p.arm_bandwidth(),
        NumberOr::Keyword(BandwidthKw::Calibrated) => calibrate_bandwidth(&p, CALIBRATION_OMEGA, CALIBRATION_KAPPA_SQ)
            .map_err(|e| CliError::Config(format!("`ifo.bandwidth_rad_s`: {e}")))?,
    };
    Ok(p)
}

/// Config key for a core parameter name within `section`.
pub fn config_key(section: &str, name: &str) -> String {
    let key = match (section, name) {
        ("omfc" | "ifo", "mass") => "mass_kg",
        (_, "mech_omega") => "mech_freq_hz",
        (_, "length_a") => "length_a_m",
        (_, "length_c") => "length_c_m",
        (_, "gamma_a") => "gamma_a_rad_s",
        (_, "gamma_c") => "gamma_c_rad_s",
        (_, "pump_power_a") => "pump_power_a_w",
        (_, "pump_power_c") => "pump_power_c_w",
        (_, "pump_wavelength") => "pump_wavelength_m",
        (_, "temperature") => "temperature_k",
        (_, "gamma_opt_override") => "gamma_opt_rad_s",
        (_, "arm_length") => "arm_length_m",
        (_, "arm_power") => "arm_power_w",
        (_, "carrier_omega") => "wavelength_m",
        (_, "bandwidth") => "bandwidth_rad_s",
        (_, "detuning") => "detuning_hz",
        (_, "half_bandwidth") => "half_bandwidth_hz",
        (_, "dc_offset") => "dc_offset_rad",
        (_, "angle_jitter") => "angle_jitter_rad",
        (_, "r" | "squeeze") => "squeeze_db",
        (_, "angle") => "squeeze_angle_rad",
        (_, other) => other,
    };
    let section = match name {
        "round_trip_loss" | "temperature" | "q_factor" | "gamma_opt_override" | "gamma_a" | "gamma_c" => "omfc",
        "circulator_loss" | "external_loss" | "bandwidth" | "itm_transmission" | "srm_transmission" => "ifo",
        "detuning" | "half_bandwidth" => "filter",
        _ => section,
    };
    format!("{section}.{key}")
}

/// Maps a core error to a CLI error, naming the config key where one applies.
pub fn keyed(section: &str, e: omfc_core::Error) -> CliError {
    match e {
        omfc_core::Error::InvalidParameter { name, .. } => CliError::Config(format!("`{}`: {e}", config_key(section, name))),
        other => CliError::from(other),
    }
}
