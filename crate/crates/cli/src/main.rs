use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use omfc_cli::commands::{self, parse_sweep_value, SweepTable};
use omfc_cli::{CliError, CliResult, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "omfc", version, about = "Quantum-noise budgets for converter-assisted interferometers")]
struct Cli {
    /// TOML configuration, or an earlier output file whose header is reused.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    fmin: Option<f64>,
    #[arg(long, global = true)]
    fmax: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// fd_squeezing, variational_readout, baseline_vacuum or baseline_fixed_squeeze.
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Converter response: conversion rate, loss, thermal noise and squeeze level.
    Convert,
    /// Total, SQL, baseline and quantum components of the selected scheme.
    Sensitivity,
    /// Sensitivity with every noise component.
    Budget,
    /// Thermal-noise criterion for both schemes.
    Criterion,
    /// Optimise filter parameters against imperfection-induced degradation.
    Tune {
        /// Trace file; defaults to `<out>.trace.csv` when --out is given.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Repeat a table over values of one dotted config key.
    Sweep {
        #[arg(long)]
        param: String,
        /// Comma-separated TOML literals.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_enum, default_value_t = Table::Sensitivity)]
        table: Table,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Table {
    Convert,
    Sensitivity,
    Budget,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut run = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = cli.fmin {
        run.grid.f_min_hz = f;
    }
    if let Some(f) = cli.fmax {
        run.grid.f_max_hz = f;
    }
    if let Some(n) = cli.points {
        run.grid.points = n;
    }
    if let Some(s) = &cli.scheme {
        run.scheme.mode = toml::Value::String(s.clone())
            .try_into()
            .map_err(|_| CliError::Config(format!("`scheme.mode`: unknown scheme `{s}`")))?;
    }
    Ok(run)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    let config = load(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Convert => emit(out, &commands::convert(&config.resolve()?)?),
        Command::Sensitivity => emit(out, &commands::sensitivity(&config.resolve()?, false)?),
        Command::Budget => emit(out, &commands::sensitivity(&config.resolve()?, true)?),
        Command::Criterion => {
            let (table, text) = commands::criterion(&config.resolve()?)?;
            eprint!("{text}");
            emit(out, &table)
        }
        Command::Tune { trace } => {
            let t = commands::tune(&config.resolve()?)?;
            emit(out, &t.summary)?;
            let trace_path = trace.clone().or_else(|| out.map(|p| p.with_extension("trace.csv")));
            if let Some(p) = trace_path {
                fs::write(p, &t.trace)?;
            }
            if t.result.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged)
            }
        }
        Command::Sweep { param, values, table } => {
            let values: Vec<toml::Value> = values.iter().map(|v| parse_sweep_value(v)).collect();
            let table = match table {
                Table::Convert => SweepTable::Convert,
                Table::Sensitivity => SweepTable::Sensitivity,
                Table::Budget => SweepTable::Budget,
            };
            emit(out, &commands::sweep(&config, param, &values, table)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omfc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
