use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn omfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omfc")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows as (columns, rows) with numeric cells parsed.
fn table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (cols, rows)
}

fn column(cols: &[String], name: &str) -> usize {
    cols.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

const PERFECT: &str = "[filter]\npolicy = \"perfect\"\n";

#[test]
fn header_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[grid]\npoints = 12\n[omfc]\ntemperature_k = 3.5\n[scheme]\nmode = \"fd_squeezing\"\n[filter]\npolicy = \"perfect\"\n",
    );
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let o = omfc(&["budget", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = omfc(&["budget", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    let text = fs::read_to_string(&first).unwrap();
    assert!(text.contains("# omfc.temperature_k = 3.5\n"));
    assert!(text.contains("# meta.version = "));
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[omfc]\ntemprature_k = 2.0\n");
    let o = omfc(&["convert", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omfc.temprature_k"), "{}", stderr(&o));
}

#[test]
fn invalid_value_is_named() {
    let dir = tempfile::tempdir().unwrap();
    for (body, key) in [
        ("[ifo]\nmass_kg = -4.0\n", "ifo.mass_kg"),
        ("[omfc]\nmass_kg = 0.0\n", "omfc.mass_kg"),
        ("[omfc]\nround_trip_loss = 0.5\n", "omfc.round_trip_loss"),
        ("[filter]\npolicy = \"cavity\"\nhalf_bandwidth_hz = -1.0\n", "filter.half_bandwidth_hz"),
        ("[scheme]\nmode = \"variational_readout\"\nreadout = 0.3\n", "scheme.readout"),
        ("[grid]\npoints = 1\n", "grid.points"),
    ] {
        let cfg = write(dir.path(), "c.toml", body);
        let o = omfc(&["sensitivity", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(stderr(&o).contains(key), "{body}: {}", stderr(&o));
    }
}

#[test]
fn malformed_toml_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[omfc\nmass_kg = 1\n");
    assert_eq!(omfc(&["convert", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(omfc(&["convert", "--scheme", "nonsense"]).status.code(), Some(2));
    assert_eq!(omfc(&["convert", "--fmin", "10", "--fmax", "1"]).status.code(), Some(2));
}

#[test]
fn convert_reaches_unity_at_low_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{PERFECT}[grid]\nf_min_hz = 0.1\nf_max_hz = 1e5\npoints = 30\n"));
    let o = omfc(&["convert", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let (cols, rows) = table(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(cols[0], "frequency_Hz");
    let abs = column(&cols, "conversion_abs");
    assert!((rows[0][abs] - 1.0).abs() < 1e-3);
    assert!(rows.last().unwrap()[abs] < 0.9);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn lossless_converter_keeps_squeeze_level() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{PERFECT}[grid]\npoints = 10\nf_max_hz = 10.0\n[omfc]\nround_trip_loss = 0.0\ntemperature_k = 0.0\nq_factor = 1e30\n"
    );
    let cfg = write(dir.path(), "c.toml", &body);
    let o = omfc(&["convert", "--config", cfg.to_str().unwrap()]);
    let (cols, rows) = table(&String::from_utf8(o.stdout).unwrap());
    let sq = column(&cols, "squeeze_level_dB");
    assert!(rows.iter().all(|r| (r[sq] - 12.0).abs() < 1e-4), "{rows:?}");
}

#[test]
fn vacuum_baseline_touches_sql_once() {
    let o = omfc(&["sensitivity", "--scheme", "baseline_vacuum", "--points", "400", "--fmin", "1", "--fmax", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (cols, rows) = table(&String::from_utf8(o.stdout).unwrap());
    let (tot, sql) = (column(&cols, "S_total_per_Hz"), column(&cols, "S_sql_per_Hz"));
    let ratio: Vec<f64> = rows.iter().map(|r| r[tot] / r[sql]).collect();
    assert!(ratio.iter().all(|&x| x >= 1.0 - 1e-9));
    let minima = (1..ratio.len() - 1).filter(|&i| ratio[i] <= ratio[i - 1] && ratio[i] <= ratio[i + 1]).count();
    assert_eq!(minima, 1);
    assert!(ratio.iter().cloned().fold(f64::INFINITY, f64::min) < 1.01);
}

#[test]
fn perfect_variational_backaction_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{PERFECT}[grid]\npoints = 25\n[scheme]\nconversion = \"ideal\"\n"));
    let o = omfc(&["sensitivity", "--config", cfg.to_str().unwrap()]);
    let (cols, rows) = table(&String::from_utf8(o.stdout).unwrap());
    let (ba, shot) = (column(&cols, "S_quantum_backaction_per_Hz"), column(&cols, "S_quantum_shot_per_Hz"));
    assert!(rows.iter().all(|r| r[ba] < 1e-12 * r[shot]));
}

#[test]
fn criterion_reports_both_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{PERFECT}[omfc]\ntemperature_k = 0.0\n"));
    let o = omfc(&["criterion", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(",PASS")));
    let bound: f64 = rows[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!((bound - 7.64e-7).abs() < 0.01e-7, "{bound}");
    assert!(stderr(&o).contains("variational_readout"));
}

#[test]
fn sweep_emits_labelled_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{PERFECT}[grid]\npoints = 5\n"));
    let o = omfc(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "omfc.gamma_a_rad_s", "--values", "1e5,1.5e5,2e5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let labels: Vec<&str> = text.lines().filter(|l| l.starts_with("#> ")).collect();
    assert_eq!(labels.len(), 3);
    assert!(labels[1].contains("omfc.gamma_a_rad_s = 150000.0"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 5);
    assert!(text.contains("# meta.sweep.param = \"omfc.gamma_a_rad_s\""));

    let o = omfc(&["sweep", "--param", "omfc.not_a_key", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omfc.not_a_key"));
}

#[test]
fn sweep_round_trip_loss_degrades_squeezing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{PERFECT}[grid]\npoints = 8\n"));
    let o = omfc(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "omfc.round_trip_loss",
        "--values",
        "0.0,1e-5",
        "--table",
        "convert",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (cols, rows) = table(&String::from_utf8(o.stdout).unwrap());
    let sq = column(&cols, "squeeze_level_dB");
    let (a, b) = rows.split_at(8);
    assert!(a.iter().zip(b).all(|(x, y)| y[sq] <= x[sq]));
    assert!(a.iter().zip(b).any(|(x, y)| y[sq] < x[sq]));
}

#[test]
fn tune_writes_trace_and_flags_exhaustion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[grid]\npoints = 5\n[filter]\npolicy = \"cavity\"\ndetuning_hz = -8.0\nhalf_bandwidth_hz = 8.0\n[tune]\nmax_evals = 4\n",
    );
    let out = dir.path().join("t.csv");
    let trace = dir.path().join("trace.csv");
    let o =
        omfc(&["tune", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("NOT_CONVERGED"));
    let (cols, rows) = table(&fs::read_to_string(&trace).unwrap());
    assert_eq!(cols, ["eval_index", "detuning_Hz", "half_bandwidth_Hz", "dc_offset_rad", "objective_dB", "best_dB"]);
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1][5] <= w[0][5]));
    assert!(fs::read_to_string(&out).unwrap().contains("# meta.tune.converged = false"));
}

#[test]
fn tune_rejects_perfect_filter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", PERFECT);
    let o = omfc(&["tune", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("filter.policy"));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{PERFECT}[grid]\npoints = 30\n"));
    for cmd in ["convert", "budget", "criterion"] {
        let a = omfc(&[cmd, "--config", cfg.to_str().unwrap()]).stdout;
        let b = omfc(&[cmd, "--config", cfg.to_str().unwrap()]).stdout;
        assert!(!a.is_empty());
        assert_eq!(a, b, "{cmd}");
    }
}
