//! Filter tuning against angle-error-induced sensitivity loss.

pub mod simplex;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::FilterParams;
use crate::optics::{FrequencyGrid, Spacing};
use crate::schemes::{evaluate_point, FilterPolicy, SchemeConfig};
use simplex::{minimize, Axis, Options};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeVar {
    Detuning,
    Bandwidth,
    DcOffset,
}

impl FreeVar {
    pub fn as_str(self) -> &'static str {
        match self {
            FreeVar::Detuning => "detuning",
            FreeVar::Bandwidth => "bandwidth",
            FreeVar::DcOffset => "dc_offset",
        }
    }

    fn get(self, cfg: &SchemeConfig) -> Result<f64> {
        let f = cavity(cfg)?;
        Ok(match self {
            FreeVar::Detuning => f.detuning,
            FreeVar::Bandwidth => f.half_bandwidth,
            FreeVar::DcOffset => cfg.dc_offset,
        })
    }

    fn set(self, cfg: &mut SchemeConfig, v: f64) {
        match (self, &mut cfg.filter) {
            (FreeVar::Detuning, FilterPolicy::Cavity(f)) => f.detuning = v,
            (FreeVar::Bandwidth, FilterPolicy::Cavity(f)) => f.half_bandwidth = v,
            (FreeVar::DcOffset, _) => cfg.dc_offset = v,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeVariable {
    pub var: FreeVar,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Degradation (dB) at one frequency.
    DegradationAt { f_ref: f64 },
    /// Mean degradation (dB) over log-spaced points in a band.
    BandIntegrated { f_lo: f64, f_hi: f64, points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSpec {
    pub vars: Vec<FreeVariable>,
    pub objective: Objective,
    pub tolerance_db: f64,
    pub max_evals: usize,
    pub scan_points: usize,
}

impl TuneSpec {
    fn validate(&self, grid: &FrequencyGrid) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTuneSpec(m));
        if self.vars.is_empty() {
            return bad("no free variables".into());
        }
        for (i, v) in self.vars.iter().enumerate() {
            if Axis::new(v.lo, v.hi).is_none() {
                return bad(format!("bounds of `{}` must be finite and ordered", v.var.as_str()));
            }
            if v.var == FreeVar::Bandwidth && v.lo <= 0.0 {
                return bad("bandwidth bounds must be positive".into());
            }
            if self.vars[..i].iter().any(|w| w.var == v.var) {
                return bad(format!("`{}` listed twice", v.var.as_str()));
            }
        }
        if !(self.tolerance_db.is_finite() && self.tolerance_db > 0.0) {
            return bad("tolerance must be positive".into());
        }
        if self.max_evals == 0 {
            return bad("max_evals must be positive".into());
        }
        match self.objective {
            Objective::DegradationAt { f_ref } => grid.check_contains("f_ref", f_ref),
            Objective::BandIntegrated { f_lo, f_hi, points } => {
                grid.check_contains("f_lo", f_lo)?;
                grid.check_contains("f_hi", f_hi)?;
                if points < 2 || f_lo >= f_hi {
                    return bad("band needs f_lo < f_hi and at least two points".into());
                }
                Ok(())
            }
        }
    }
}

fn cavity(cfg: &SchemeConfig) -> Result<FilterParams> {
    match cfg.filter {
        FilterPolicy::Cavity(f) => Ok(f),
        FilterPolicy::Perfect => Err(Error::InvalidTuneSpec("tuning needs a cavity filter".into())),
    }
}

fn total_at(cfg: &SchemeConfig, f_hz: f64) -> Result<f64> {
    Ok(evaluate_point(cfg, TAU * f_hz)?.total())
}

/// 10·log10(S_h(cfg)/S_h(reference without converter imperfections)) at `f_ref`.
pub fn degradation_against(cfg: &SchemeConfig, reference: &SchemeConfig, f_ref: f64) -> Result<f64> {
    let ideal = reference.without_converter_imperfections();
    Ok(10.0 * (total_at(cfg, f_ref)? / total_at(&ideal, f_ref)?).log10())
}

/// Degradation of `cfg` relative to itself with converter imperfections removed.
pub fn degradation_at(cfg: &SchemeConfig, grid: &FrequencyGrid, f_ref: f64) -> Result<f64> {
    grid.check_contains("f_ref", f_ref)?;
    cfg.validate()?;
    degradation_against(cfg, cfg, f_ref)
}

fn band(f_lo: f64, f_hi: f64, points: usize) -> Result<Vec<f64>> {
    Ok(FrequencyGrid::new(f_lo, f_hi, points, Spacing::Logarithmic)?.frequencies_hz().collect())
}

/// Objective evaluator with the reference spectrum cached once.
struct Evaluator {
    freqs: Vec<f64>,
    reference_db: Vec<f64>,
}

impl Evaluator {
    fn new(objective: Objective, reference: &SchemeConfig) -> Result<Self> {
        let freqs = match objective {
            Objective::DegradationAt { f_ref } => vec![f_ref],
            Objective::BandIntegrated { f_lo, f_hi, points } => band(f_lo, f_hi, points)?,
        };
        let ideal = reference.without_converter_imperfections();
        let reference_db = freqs.iter().map(|&f| Ok(10.0 * total_at(&ideal, f)?.log10())).collect::<Result<_>>()?;
        Ok(Self { freqs, reference_db })
    }

    fn eval(&self, cfg: &SchemeConfig) -> Result<f64> {
        let mut sum = 0.0;
        for (f, r) in self.freqs.iter().zip(&self.reference_db) {
            sum += 10.0 * total_at(cfg, *f)?.log10() - r;
        }
        Ok(sum / self.freqs.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: usize,
    pub params: Vec<f64>,
    pub objective_db: f64,
    pub best_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub free: Vec<FreeVar>,
    pub config: SchemeConfig,
    pub filter: FilterParams,
    pub dc_offset: f64,
    pub initial_objective: f64,
    pub objective: f64,
    pub evals: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// Minimises the objective over the free variables, starting from `cfg`.
/// The ideal reference is `cfg` itself without converter imperfections and
/// stays fixed while the filter moves.
pub fn optimize(cfg: &SchemeConfig, spec: &TuneSpec, grid: &FrequencyGrid) -> Result<TuneResult> {
    cfg.validate()?;
    cavity(cfg)?;
    spec.validate(grid)?;
    let evaluator = Evaluator::new(spec.objective, cfg)?;
    let axes: Vec<Axis> = spec.vars.iter().map(|v| Axis::new(v.lo, v.hi).expect("validated")).collect();
    let x0 = spec.vars.iter().map(|v| Ok(v.var.get(cfg)?.clamp(v.lo, v.hi))).collect::<Result<Vec<_>>>()?;
    let apply = |x: &[f64]| {
        let mut c = cfg.clone();
        for (v, &val) in spec.vars.iter().zip(x) {
            v.var.set(&mut c, val);
        }
        c
    };
    let opts = Options { scan_points: spec.scan_points, f_tol: spec.tolerance_db, x_tol: 1e-6, max_evals: spec.max_evals };
    let m = minimize(|x| evaluator.eval(&apply(x)).unwrap_or(f64::INFINITY), &axes, &x0, opts);
    let config = apply(&m.x);
    let trace = m
        .trace
        .iter()
        .enumerate()
        .map(|(index, e)| TraceEntry { index, params: e.x.clone(), objective_db: e.value, best_db: e.best })
        .collect();
    Ok(TuneResult {
        free: spec.vars.iter().map(|v| v.var).collect(),
        filter: cavity(&config)?,
        dc_offset: config.dc_offset,
        config,
        initial_objective: m.initial_value,
        objective: m.value,
        evals: m.evals,
        converged: m.converged,
        trace,
    })
}

/// Fits a cavity filter to the imperfection-free configuration by minimising
/// the band-mean of 10·log10 S_h. Both detuning signs are searched and the
/// better one kept (negative first on ties).
pub fn calibrate_filter(cfg: &SchemeConfig, f_lo: f64, f_hi: f64, points: usize) -> Result<FilterParams> {
    let freqs = band(f_lo, f_hi, points)?;
    let base =
        SchemeConfig { filter: FilterPolicy::Cavity(FilterParams::new(-100.0, 100.0)?), ..cfg.without_converter_imperfections() };
    base.validate()?;
    let axes_for = |sign: f64| {
        let d = if sign < 0.0 { Axis::new(-1e4, -1.0) } else { Axis::new(1.0, 1e4) };
        [d.expect("static bounds"), Axis::new(1.0, 1e4).expect("static bounds")]
    };
    let objective = |x: &[f64]| {
        let c =
            SchemeConfig { filter: FilterPolicy::Cavity(FilterParams { detuning: x[0], half_bandwidth: x[1] }), ..base.clone() };
        let mut sum = 0.0;
        for &f in &freqs {
            match total_at(&c, f) {
                Ok(v) => sum += 10.0 * v.log10(),
                Err(_) => return f64::INFINITY,
            }
        }
        sum / freqs.len() as f64
    };
    let opts = Options { scan_points: 13, f_tol: 1e-9, x_tol: 1e-7, max_evals: 3000 };
    let mut best: Option<(f64, FilterParams)> = None;
    for sign in [-1.0, 1.0] {
        let m = minimize(objective, &axes_for(sign), &[sign * 100.0, 100.0], opts);
        if best.is_none_or(|(v, _)| m.value < v) {
            best = Some((m.value, FilterParams::new(m.x[0], m.x[1])?));
        }
    }
    Ok(best.expect("two searches ran").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::SchemeMode;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(1.0, 1000.0, 50, Spacing::Logarithmic).unwrap()
    }

    fn cavity_cfg() -> SchemeConfig {
        SchemeConfig {
            filter: FilterPolicy::Cavity(FilterParams::new(-60.0, 60.0).unwrap()),
            ..SchemeConfig::new(SchemeMode::VariationalReadout)
        }
    }

    #[test]
    fn no_imperfections_means_zero_degradation() {
        let cfg = cavity_cfg().without_converter_imperfections();
        assert!(degradation_at(&cfg, &grid(), 3.0).unwrap().abs() < 1e-12);
        let spec = TuneSpec {
            vars: vec![FreeVariable { var: FreeVar::DcOffset, lo: -0.1, hi: 0.1 }],
            objective: Objective::DegradationAt { f_ref: 3.0 },
            tolerance_db: 1e-6,
            max_evals: 200,
            scan_points: 5,
        };
        let r = optimize(&cfg, &spec, &grid()).unwrap();
        assert!(r.objective <= r.initial_objective);
        assert_eq!(r.initial_objective, 0.0);
    }

    #[test]
    fn reference_outside_grid_rejected() {
        let cfg = cavity_cfg();
        assert!(matches!(degradation_at(&cfg, &grid(), 0.5), Err(Error::OutOfRange { .. })));
        let spec = TuneSpec {
            vars: vec![FreeVariable { var: FreeVar::Detuning, lo: -100.0, hi: -1.0 }],
            objective: Objective::BandIntegrated { f_lo: 0.1, f_hi: 30.0, points: 10 },
            tolerance_db: 1e-3,
            max_evals: 10,
            scan_points: 3,
        };
        assert!(optimize(&cfg, &spec, &grid()).is_err());
    }

    #[test]
    fn perfect_filter_cannot_be_tuned() {
        let cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
        let spec = TuneSpec {
            vars: vec![FreeVariable { var: FreeVar::DcOffset, lo: -0.1, hi: 0.1 }],
            objective: Objective::DegradationAt { f_ref: 3.0 },
            tolerance_db: 1e-3,
            max_evals: 10,
            scan_points: 3,
        };
        assert!(matches!(optimize(&cfg, &spec, &grid()), Err(Error::InvalidTuneSpec(_))));
    }

    #[test]
    fn dc_offset_tuning_is_deterministic_and_improves() {
        let cfg = cavity_cfg();
        let spec = TuneSpec {
            vars: vec![FreeVariable { var: FreeVar::DcOffset, lo: -0.05, hi: 0.05 }],
            objective: Objective::DegradationAt { f_ref: 3.0 },
            tolerance_db: 1e-6,
            max_evals: 300,
            scan_points: 11,
        };
        let a = optimize(&cfg, &spec, &grid()).unwrap();
        let b = optimize(&cfg, &spec, &grid()).unwrap();
        assert_eq!(a, b);
        assert!(a.objective < a.initial_objective);
        assert!(a.trace.windows(2).all(|w| w[1].best_db <= w[0].best_db));
        assert!(a.dc_offset.abs() <= 0.05);
    }

    #[test]
    fn calibrated_filter_tracks_free_mass_response() {
        let cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
        let f = calibrate_filter(&cfg, 1.0, 30.0, 30).unwrap();
        let cal = SchemeConfig { filter: FilterPolicy::Cavity(f), ..cfg.without_converter_imperfections() };
        let perfect = cfg.without_converter_imperfections();
        // Within a few dB of the perfect-filter floor across the band.
        for fh in [1.0, 3.0, 10.0, 30.0] {
            let d = 10.0 * (total_at(&cal, fh).unwrap() / total_at(&perfect, fh).unwrap()).log10();
            assert!(d < 10.0, "{fh} Hz: {d} dB with {f:?}");
        }
    }
}
