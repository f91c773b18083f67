//! Command implementations. Each returns the rendered output text.

use std::f64::consts::TAU;

use omfc_core::omfc::{
    converted_squeeze_level, derive_rates, effective_loss, exact_conversion_rate, thermal_criterion, thermal_noise_spectrum,
    CriterionScheme,
};
use omfc_core::schemes::{budget, Component, FilterPolicy};
use omfc_core::tuning::{degradation_against, optimize, FreeVar, Objective, TuneResult};
use omfc_core::{SqueezedState, TuneSpec};

use crate::config::{format_value, keyed, Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, Document};

pub fn convert(res: &Resolved) -> CliResult<String> {
    let mut doc = Document::new(res, "convert", &[]);
    doc.columns(&convert_columns(false));
    write_convert(res, &mut doc, None)?;
    Ok(doc.into_string())
}

fn convert_columns(block: bool) -> Vec<&'static str> {
    let mut cols =
        vec!["frequency_Hz", "conversion_abs", "conversion_arg_rad", "eps_omfc", "S_th_vacuum_units", "squeeze_level_dB"];
    if block {
        cols.insert(0, "block");
    }
    cols
}

fn write_convert(res: &Resolved, doc: &mut Document, block: Option<usize>) -> CliResult<()> {
    let p = &res.scheme.omfc;
    let rates = derive_rates(p).map_err(|e| keyed("omfc", e))?;
    for (f, &w) in res.grid.frequencies_hz().zip(res.grid.omegas()) {
        let c = exact_conversion_rate(p, &rates, w).map_err(|e| keyed("omfc", e))?;
        let eps = effective_loss(p, &rates, w).map_err(|e| keyed("omfc", e))?;
        let sth = thermal_noise_spectrum(p, &rates, w).map_err(|e| keyed("omfc", e))?;
        let sq = converted_squeeze_level(p, &rates, &res.scheme.input_squeeze, w).map_err(|e| keyed("omfc", e))?;
        let row = vec![f, c.norm(), c.arg(), eps, sth, sq];
        match block {
            Some(k) => doc.labeled_row(&k.to_string(), &row),
            None => doc.row(&row),
        }
    }
    Ok(())
}

/// Noise budget table. `all` adds every component and the angle columns.
pub fn sensitivity(res: &Resolved, all: bool) -> CliResult<String> {
    let mut doc = Document::new(res, if all { "budget" } else { "sensitivity" }, &[]);
    doc.columns(&refs(&budget_columns(all, false)));
    write_budget(res, &mut doc, all, None)?;
    Ok(doc.into_string())
}

fn component_column(c: Component) -> String {
    format!("S_{}_per_Hz", c.as_str())
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn shown_components(all: bool) -> Vec<Component> {
    if all {
        Component::ALL.to_vec()
    } else {
        vec![Component::QuantumShot, Component::QuantumBackaction]
    }
}

fn budget_columns(all: bool, block: bool) -> Vec<String> {
    let mut cols: Vec<String> =
        ["frequency_Hz", "S_total_per_Hz", "S_sql_per_Hz", "S_baseline_per_Hz"].map(String::from).to_vec();
    cols.extend(shown_components(all).into_iter().map(component_column));
    if all {
        cols.push("kappa".into());
        cols.push("residual_angle_rad".into());
    }
    if block {
        cols.insert(0, "block".into());
    }
    cols
}

fn write_budget(res: &Resolved, doc: &mut Document, all: bool, block: Option<usize>) -> CliResult<()> {
    let shown = shown_components(all);
    let b = budget(&res.scheme, &res.grid).map_err(|e| keyed("scheme", e))?;
    for (i, f) in res.grid.frequencies_hz().enumerate() {
        let mut row = vec![f, b.total[i], b.sql[i], b.baseline[i]];
        row.extend(shown.iter().map(|&c| b.component(c)[i]));
        if all {
            row.push(b.kappa[i]);
            row.push(b.residual_angle[i]);
        }
        match block {
            Some(k) => doc.labeled_row(&k.to_string(), &row),
            None => doc.row(&row),
        }
    }
    Ok(())
}

pub fn criterion(res: &Resolved) -> CliResult<(String, String)> {
    let p = &res.scheme.omfc;
    let rates = derive_rates(p).map_err(|e| keyed("omfc", e))?;
    let squeeze = SqueezedState::from_db(res.run.scheme.squeeze_db, 0.0).map_err(|e| keyed("scheme", e))?;
    let mut doc = Document::new(res, "criterion", &[]);
    doc.columns(&["scheme", "gamma_opt_rad_s", "reference_spectrum", "t_over_q_K", "bound_K", "ratio", "verdict"]);
    let mut text = String::new();
    for (name, scheme) in
        [("fd_squeezing", CriterionScheme::FdSqueezing { r: squeeze.r }), ("variational_readout", CriterionScheme::Variational)]
    {
        let r = thermal_criterion(p, &rates, scheme, res.thresholds).map_err(|e| keyed("omfc", e))?;
        doc.raw_row(&[
            name.to_owned(),
            num(r.gamma_opt),
            num(r.reference_spectrum),
            num(r.t_over_q),
            num(r.bound),
            num(r.ratio),
            r.verdict.as_str().to_owned(),
        ]);
        text.push_str(&format!(
            "{name}: T/Q_m = {:.3e} K vs bound {:.3e} K (ratio {:.3e}) -> {}\n",
            r.t_over_q,
            r.bound,
            r.ratio,
            r.verdict.as_str()
        ));
    }
    Ok((doc.into_string(), text))
}

pub struct TuneOutput {
    pub summary: String,
    pub trace: String,
    pub result: TuneResult,
}

fn ref_frequency(spec: &TuneSpec, res: &Resolved) -> f64 {
    match spec.objective {
        Objective::DegradationAt { f_ref } => f_ref,
        Objective::BandIntegrated { .. } => res.run.tune.f_ref_hz,
    }
}

pub fn tune(res: &Resolved) -> CliResult<TuneOutput> {
    let spec = res.tune_spec()?;
    let result = optimize(&res.scheme, &spec, &res.grid).map_err(|e| keyed("tune", e))?;
    let f_ref = ref_frequency(&spec, res);
    res.grid.check_contains("tune.f_ref_hz", f_ref).map_err(|e| keyed("tune", e))?;
    let before = degradation_against(&res.scheme, &res.scheme, f_ref)?;
    let after = degradation_against(&result.config, &res.scheme, f_ref)?;

    let free = result.free.iter().map(|v| format!("\"{}\"", v.as_str())).collect::<Vec<_>>().join(", ");
    let extra = vec![
        ("meta.tune.free".to_owned(), format!("[{free}]")),
        ("meta.tune.evals".to_owned(), result.evals.to_string()),
        ("meta.tune.converged".to_owned(), result.converged.to_string()),
    ];
    let FilterPolicy::Cavity(f0) = res.scheme.filter else { unreachable!("tune_spec requires a cavity") };

    let mut doc = Document::new(res, "tune", &extra);
    doc.columns(&["quantity", "before", "after"]);
    let rows = [
        ("detuning_Hz", f0.detuning / TAU, result.filter.detuning / TAU),
        ("half_bandwidth_Hz", f0.half_bandwidth / TAU, result.filter.half_bandwidth / TAU),
        ("dc_offset_rad", res.scheme.dc_offset, result.dc_offset),
        ("objective_dB", result.initial_objective, result.objective),
        ("degradation_at_f_ref_dB", before, after),
    ];
    for (q, b, a) in rows {
        doc.raw_row(&[q.to_owned(), num(b), num(a)]);
    }

    let mut trace = Document::new(res, "tune", &extra);
    let mut cols = vec!["eval_index".to_owned()];
    cols.extend(result.free.iter().map(|v| trace_column(*v).to_owned()));
    cols.extend(["objective_dB".to_owned(), "best_dB".to_owned()]);
    trace.columns(&cols.iter().map(String::as_str).collect::<Vec<_>>());
    for e in &result.trace {
        let mut row = vec![e.index as f64];
        row.extend(result.free.iter().zip(&e.params).map(|(v, &x)| match v {
            FreeVar::DcOffset => x,
            _ => x / TAU,
        }));
        row.extend([e.objective_db, e.best_db]);
        trace.row(&row);
    }
    Ok(TuneOutput { summary: doc.into_string(), trace: trace.into_string(), result })
}

fn trace_column(v: FreeVar) -> &'static str {
    match v {
        FreeVar::Detuning => "detuning_Hz",
        FreeVar::Bandwidth => "half_bandwidth_Hz",
        FreeVar::DcOffset => "dc_offset_rad",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTable {
    Convert,
    Sensitivity,
    Budget,
}

/// Parses one sweep value as a TOML literal, falling back to a bare string.
pub fn parse_sweep_value(s: &str) -> toml::Value {
    let s = s.trim();
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_owned()))
}

/// Stacked table, one block per value of the dotted config key `path`.
pub fn sweep(base: &RunConfig, path: &str, values: &[toml::Value], table: SweepTable) -> CliResult<String> {
    if values.is_empty() {
        return Err(CliError::Config("`sweep`: no values given".into()));
    }
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut t = base.to_table();
        set_path(&mut t, path, v.clone())?;
        configs.push(RunConfig::from_table(t)?);
    }
    let first = base.resolve()?;
    let listed = values.iter().map(format_value).collect::<Vec<_>>().join(", ");
    let extra =
        vec![("meta.sweep.param".to_owned(), format!("\"{path}\"")), ("meta.sweep.values".to_owned(), format!("[{listed}]"))];
    let command = match table {
        SweepTable::Convert => "sweep convert",
        SweepTable::Sensitivity => "sweep sensitivity",
        SweepTable::Budget => "sweep budget",
    };
    let mut doc = Document::new(&first, command, &extra);
    match table {
        SweepTable::Convert => doc.columns(&convert_columns(true)),
        SweepTable::Sensitivity => doc.columns(&refs(&budget_columns(false, true))),
        SweepTable::Budget => doc.columns(&refs(&budget_columns(true, true))),
    }
    for (k, (cfg, v)) in configs.iter().zip(values).enumerate() {
        let res = cfg.resolve()?;
        doc.block(&format!("block {k}: {path} = {}", format_value(v)));
        match table {
            SweepTable::Convert => write_convert(&res, &mut doc, Some(k))?,
            SweepTable::Sensitivity => write_budget(&res, &mut doc, false, Some(k))?,
            SweepTable::Budget => write_budget(&res, &mut doc, true, Some(k))?,
        }
    }
    Ok(doc.into_string())
}

fn set_path(t: &mut toml::Table, path: &str, v: toml::Value) -> CliResult<()> {
    let unknown = || CliError::Config(format!("`{path}`: unknown sweep key"));
    let mut parts = path.split('.').peekable();
    let mut cur = t;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            return match cur.get_mut(part) {
                Some(slot) if !slot.is_table() => {
                    *slot = v;
                    Ok(())
                }
                _ => Err(unknown()),
            };
        }
        cur = cur.get_mut(part).and_then(toml::Value::as_table_mut).ok_or_else(unknown)?;
    }
    Err(unknown())
}
