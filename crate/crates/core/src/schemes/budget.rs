use serde::{Deserialize, Serialize};

use crate::optics::FrequencyGrid;

/// Additive noise contributions to the strain PSD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    QuantumShot,
    QuantumBackaction,
    OmfcThermal,
    OmfcLoss,
    AngleError,
    ExternalLoss,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::QuantumShot,
        Component::QuantumBackaction,
        Component::OmfcThermal,
        Component::OmfcLoss,
        Component::AngleError,
        Component::ExternalLoss,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Component::QuantumShot => "quantum_shot",
            Component::QuantumBackaction => "quantum_backaction",
            Component::OmfcThermal => "omfc_thermal",
            Component::OmfcLoss => "omfc_loss",
            Component::AngleError => "angle_error",
            Component::ExternalLoss => "external_loss",
        }
    }
}

/// Strain-referenced budget at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointBudget {
    pub components: [f64; 6],
    pub sql: f64,
    pub kappa: f64,
    /// Realized minus ideal (arctan κ) angle, wrapped to (−π/2, π/2].
    pub residual_angle: f64,
}

impl PointBudget {
    pub fn total(&self) -> f64 {
        self.components.iter().sum()
    }

    pub fn get(&self, c: Component) -> f64 {
        self.components[c.index()]
    }
}

/// Per-frequency decomposition of S_h (1/Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget {
    pub grid: FrequencyGrid,
    pub total: Vec<f64>,
    components: [Vec<f64>; 6],
    pub sql: Vec<f64>,
    /// Vacuum input, phase readout, no converter.
    pub baseline: Vec<f64>,
    pub residual_angle: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl NoiseBudget {
    pub(crate) fn assemble(grid: &FrequencyGrid, points: &[PointBudget], baseline: Vec<f64>) -> Self {
        let mut components: [Vec<f64>; 6] = Default::default();
        for c in Component::ALL {
            components[c.index()] = points.iter().map(|p| p.get(c)).collect();
        }
        Self {
            grid: grid.clone(),
            total: points.iter().map(PointBudget::total).collect(),
            components,
            sql: points.iter().map(|p| p.sql).collect(),
            baseline,
            residual_angle: points.iter().map(|p| p.residual_angle).collect(),
            kappa: points.iter().map(|p| p.kappa).collect(),
        }
    }

    pub fn component(&self, c: Component) -> &[f64] {
        &self.components[c.index()]
    }
}
