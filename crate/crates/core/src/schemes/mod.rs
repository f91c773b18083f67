//! Detector configurations assembled from converter and interferometer blocks.
//!
//! Each configuration is a chain of quadrature transfers evaluated per
//! frequency. Every noise source is carried to the readout separately, so the
//! budget total is the sum of its components by construction.

mod budget;
mod chain;

use serde::{Deserialize, Serialize};

pub use budget::{Component, NoiseBudget, PointBudget};
pub use chain::evaluate_point;

use crate::error::{check_fraction, check_non_negative, Error, Result};
use crate::interferometer::{FilterParams, IfoParams};
use crate::omfc::{ConversionModel, OmfcParams, ThermalModel};
use crate::optics::{FrequencyGrid, SqueezedState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeMode {
    /// Filter, convert, then inject squeezed light into the detector.
    FdSqueezing,
    /// Convert the detector output, then filter before a fixed homodyne.
    VariationalReadout,
    BaselineVacuum,
    BaselineFixedSqueeze,
}

impl SchemeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeMode::FdSqueezing => "fd_squeezing",
            SchemeMode::VariationalReadout => "variational_readout",
            SchemeMode::BaselineVacuum => "baseline_vacuum",
            SchemeMode::BaselineFixedSqueeze => "baseline_fixed_squeeze",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, SchemeMode::BaselineVacuum | SchemeMode::BaselineFixedSqueeze)
    }
}

/// Frequency-dependent rotation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterPolicy {
    /// Rotation that exactly cancels the mismatch at every frequency.
    Perfect,
    /// Detuned single cavity.
    Cavity(FilterParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReadoutPolicy {
    /// θ = arctan κ(Ω).
    Variational,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub mode: SchemeMode,
    pub omfc: OmfcParams,
    pub conversion: ConversionModel,
    pub thermal: ThermalModel,
    /// Replaces the converter's DC effective loss; the Lorentzian roll-off is kept.
    pub loss_override: Option<f64>,
    pub ifo: IfoParams,
    pub filter: FilterPolicy,
    /// DC homodyne offset (variational readout) or squeeze-angle offset (FD squeezing).
    pub dc_offset: f64,
    pub input_squeeze: SqueezedState,
    /// Inject `input_squeeze` instead of vacuum in variational readout.
    pub squeeze_variational_input: bool,
    /// RMS homodyne angle jitter, rad.
    pub angle_jitter: f64,
    pub readout: ReadoutPolicy,
}

impl SchemeConfig {
    /// Default parameters for `mode` with a perfect filter.
    pub fn new(mode: SchemeMode) -> Self {
        let readout = match mode {
            SchemeMode::VariationalReadout => ReadoutPolicy::Variational,
            _ => ReadoutPolicy::Fixed(0.0),
        };
        let input_squeeze = match mode {
            SchemeMode::BaselineVacuum => SqueezedState::vacuum(),
            _ => SqueezedState::from_db(12.0, 0.0).expect("12 dB is a valid squeeze level"),
        };
        Self {
            mode,
            omfc: OmfcParams::default(),
            conversion: ConversionModel::Exact,
            thermal: ThermalModel::Spectrum,
            loss_override: None,
            ifo: IfoParams::default(),
            filter: FilterPolicy::Perfect,
            dc_offset: 0.0,
            input_squeeze,
            squeeze_variational_input: false,
            angle_jitter: 0.0,
            readout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.omfc.validate()?;
        self.ifo.validate()?;
        if let FilterPolicy::Cavity(f) = &self.filter {
            f.validate()?;
        }
        if let Some(e) = self.loss_override {
            check_fraction("loss_override", e)?;
        }
        check_non_negative("angle_jitter", self.angle_jitter)?;
        SqueezedState::new(self.input_squeeze.r, self.input_squeeze.angle)?;
        if !self.dc_offset.is_finite() {
            return Err(Error::InvalidParameter { name: "dc_offset", value: self.dc_offset, reason: "must be finite" });
        }
        match (self.mode, self.readout) {
            (SchemeMode::VariationalReadout, ReadoutPolicy::Fixed(_)) => Err(Error::InvalidParameter {
                name: "readout",
                value: f64::NAN,
                reason: "variational readout needs the variational readout policy",
            }),
            (SchemeMode::FdSqueezing, ReadoutPolicy::Variational) => Err(Error::InvalidParameter {
                name: "readout",
                value: f64::NAN,
                reason: "FD squeezing reads out at a fixed angle",
            }),
            _ => Ok(()),
        }
    }

    /// Same configuration with every converter imperfection removed:
    /// ideal conversion, no round-trip loss, zero temperature.
    pub fn without_converter_imperfections(&self) -> Self {
        Self {
            omfc: OmfcParams { round_trip_loss: 0.0, temperature: 0.0, ..self.omfc },
            conversion: ConversionModel::Ideal,
            thermal: ThermalModel::Spectrum,
            loss_override: None,
            ..self.clone()
        }
    }
}

fn require(cfg: &SchemeConfig, expected: SchemeMode) -> Result<()> {
    if cfg.mode == expected {
        Ok(())
    } else {
        Err(Error::ModeMismatch { expected: expected.as_str(), found: cfg.mode.as_str() })
    }
}

fn assemble(cfg: &SchemeConfig, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    cfg.validate()?;
    let points = grid.omegas().iter().map(|&w| evaluate_point(cfg, w)).collect::<Result<Vec<_>>>()?;
    let reference =
        SchemeConfig { mode: SchemeMode::BaselineVacuum, readout: ReadoutPolicy::Fixed(0.0), angle_jitter: 0.0, ..cfg.clone() };
    let baseline = grid.omegas().iter().map(|&w| evaluate_point(&reference, w).map(|p| p.total())).collect::<Result<Vec<_>>>()?;
    Ok(NoiseBudget::assemble(grid, &points, baseline))
}

pub fn fd_squeezing_budget(cfg: &SchemeConfig, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    require(cfg, SchemeMode::FdSqueezing)?;
    assemble(cfg, grid)
}

pub fn variational_readout_budget(cfg: &SchemeConfig, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    require(cfg, SchemeMode::VariationalReadout)?;
    assemble(cfg, grid)
}

pub fn baseline_budget(cfg: &SchemeConfig, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    if !cfg.mode.is_baseline() {
        return Err(Error::ModeMismatch { expected: "baseline_vacuum", found: cfg.mode.as_str() });
    }
    assemble(cfg, grid)
}

/// Budget for whichever mode `cfg` selects.
pub fn budget(cfg: &SchemeConfig, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    assemble(cfg, grid)
}

/// |δθ(Ω)|: realized readout angle minus arctan κ(Ω).
pub fn residual_angle_error(cfg: &SchemeConfig, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    require(cfg, SchemeMode::VariationalReadout)?;
    cfg.validate()?;
    grid.omegas().iter().map(|&w| chain::residual_angle(cfg, w).map(f64::abs)).collect()
}

#[cfg(test)]
mod tests;
