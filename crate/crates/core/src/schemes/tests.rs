use std::f64::consts::TAU;

use proptest::prelude::*;

use super::*;
use crate::interferometer::{kimble_kappa, sql_psd};
use crate::optics::Spacing;

fn grid(n: usize) -> FrequencyGrid {
    FrequencyGrid::new(1.0, 5000.0, n, Spacing::Logarithmic).unwrap()
}

fn lossless(mut cfg: SchemeConfig) -> SchemeConfig {
    cfg = cfg.without_converter_imperfections();
    cfg.ifo.circulator_loss = 0.0;
    cfg.ifo.external_loss = 0.0;
    cfg
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn totals_are_component_sums() {
    for mode in [SchemeMode::FdSqueezing, SchemeMode::VariationalReadout, SchemeMode::BaselineFixedSqueeze] {
        let mut cfg = SchemeConfig::new(mode);
        cfg.angle_jitter = 1e-3;
        let b = budget(&cfg, &grid(40)).unwrap();
        for i in 0..b.grid.len() {
            let sum: f64 = Component::ALL.iter().map(|&c| b.component(c)[i]).sum();
            assert!(rel(sum, b.total[i]) < 1e-12);
            assert!(Component::ALL.iter().all(|&c| b.component(c)[i] >= 0.0));
        }
    }
}

#[test]
fn ideal_fd_squeezing_is_broadband() {
    let cfg = lossless(SchemeConfig::new(SchemeMode::FdSqueezing));
    let b = fd_squeezing_budget(&cfg, &grid(200)).unwrap();
    for i in 0..b.grid.len() {
        assert!(rel(b.total[i], b.baseline[i] * 10f64.powf(-1.2)) < 1e-9);
    }
}

#[test]
fn unsqueezed_fd_matches_baseline() {
    let mut cfg = SchemeConfig::new(SchemeMode::FdSqueezing).without_converter_imperfections();
    cfg.input_squeeze = SqueezedState::vacuum();
    let b = fd_squeezing_budget(&cfg, &grid(50)).unwrap();
    for i in 0..b.grid.len() {
        assert!(rel(b.total[i], b.baseline[i]) < 1e-12);
    }
}

#[test]
fn perfect_filter_evades_backaction() {
    for model in [ConversionModel::Ideal, ConversionModel::Adiabatic] {
        let mut cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
        cfg.conversion = model;
        let b = variational_readout_budget(&cfg, &grid(200)).unwrap();
        for i in 0..b.grid.len() {
            let shot = b.component(Component::QuantumShot)[i];
            assert!(b.component(Component::QuantumBackaction)[i] < 1e-12 * shot);
            assert_eq!(b.residual_angle[i], 0.0);
        }
    }
}

#[test]
fn lossless_variational_sits_on_shot_floor() {
    let cfg = lossless(SchemeConfig::new(SchemeMode::VariationalReadout));
    let g = grid(60);
    let b = variational_readout_budget(&cfg, &g).unwrap();
    for (i, &w) in g.omegas().iter().enumerate() {
        let k = kimble_kappa(&cfg.ifo, w).unwrap();
        assert!(rel(b.total[i], sql_psd(&cfg.ifo, w).unwrap() / (2.0 * k)) < 1e-10);
    }
}

#[test]
fn vacuum_baseline_oracle() {
    let mut cfg = SchemeConfig::new(SchemeMode::BaselineVacuum);
    cfg.ifo.external_loss = 0.0;
    let g = grid(80);
    let b = baseline_budget(&cfg, &g).unwrap();
    for (i, &w) in g.omegas().iter().enumerate() {
        let k = kimble_kappa(&cfg.ifo, w).unwrap();
        let sql = sql_psd(&cfg.ifo, w).unwrap();
        assert!(rel(b.total[i], (1.0 + k * k) * sql / (2.0 * k)) < 1e-10);
        assert!(rel(b.component(Component::QuantumShot)[i], sql / (2.0 * k)) < 1e-10);
        assert!(b.total[i] >= sql * (1.0 - 1e-12));
    }
}

#[test]
fn fixed_squeeze_trades_shot_for_backaction() {
    let mut vac = SchemeConfig::new(SchemeMode::BaselineVacuum);
    vac.ifo.external_loss = 0.0;
    let sq = SchemeConfig {
        mode: SchemeMode::BaselineFixedSqueeze,
        input_squeeze: SqueezedState::from_db(12.0, 0.0).unwrap(),
        ..vac.clone()
    };
    let g = grid(30);
    let a = baseline_budget(&vac, &g).unwrap();
    let b = baseline_budget(&sq, &g).unwrap();
    for i in 0..g.len() {
        let shot = b.component(Component::QuantumShot)[i] / a.component(Component::QuantumShot)[i];
        let ba = b.component(Component::QuantumBackaction)[i] / a.component(Component::QuantumBackaction)[i];
        assert!(rel(shot, 10f64.powf(-1.2)) < 1e-9);
        assert!(rel(ba, 10f64.powf(1.2)) < 1e-9);
    }
}

#[test]
fn fd_benefit_fades_at_high_frequency() {
    let cfg = SchemeConfig::new(SchemeMode::FdSqueezing);
    let g = FrequencyGrid::new(10.0, 1e5, 5, Spacing::Logarithmic).unwrap();
    let b = fd_squeezing_budget(&cfg, &g).unwrap();
    let gain: Vec<f64> = (0..g.len()).map(|i| b.total[i] / b.baseline[i]).collect();
    assert!(gain[2] < 0.5);
    assert!(gain[4] > gain[2]);
}

#[test]
fn forced_converter_loss_inflates_shot_floor() {
    let mut cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
    cfg.loss_override = Some(0.05);
    let w = TAU * 10.0;
    let p = evaluate_point(&cfg, w).unwrap();
    let floor = p.sql / (2.0 * p.kappa);
    let amplitude = (p.total() / floor).sqrt();
    assert!(amplitude > 5.0 && amplitude < 20.0, "{amplitude}");
}

#[test]
fn converter_rotation_sets_low_frequency_residual() {
    let f = crate::interferometer::FilterParams::new(-40.0, 40.0).unwrap();
    let mut cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
    cfg.filter = FilterPolicy::Cavity(f);
    let ideal = cfg.without_converter_imperfections();
    let g = FrequencyGrid::new(0.05, 1.0, 5, Spacing::Logarithmic).unwrap();
    let a = residual_angle_error(&cfg, &g).unwrap();
    let b = residual_angle_error(&ideal, &g).unwrap();
    let signed_a: Vec<f64> = g.omegas().iter().map(|&w| evaluate_point(&cfg, w).unwrap().residual_angle).collect();
    let signed_b: Vec<f64> = g.omegas().iter().map(|&w| evaluate_point(&ideal, w).unwrap().residual_angle).collect();
    let eps1 = cfg.omfc.rotation_epsilon();
    assert!((signed_a[0] - signed_b[0] - eps1).abs() < 1e-4);
    assert!(a.iter().zip(&b).all(|(x, y)| *x >= 0.0 && *y >= 0.0));
}

#[test]
fn exact_perfect_filter_has_no_residual() {
    let cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
    let r = residual_angle_error(&cfg, &grid(20)).unwrap();
    assert!(r.iter().all(|x| *x < 1e-15));
}

#[test]
fn mode_checks() {
    let g = grid(5);
    let vr = SchemeConfig::new(SchemeMode::VariationalReadout);
    assert!(matches!(fd_squeezing_budget(&vr, &g), Err(Error::ModeMismatch { .. })));
    assert!(baseline_budget(&vr, &g).is_err());
    let fd = SchemeConfig::new(SchemeMode::FdSqueezing);
    assert!(variational_readout_budget(&fd, &g).is_err());
    assert!(residual_angle_error(&fd, &g).is_err());
    let bad = SchemeConfig { readout: ReadoutPolicy::Fixed(0.0), ..vr };
    assert!(budget(&bad, &g).is_err());
}

fn monotone(base: &SchemeConfig, bump: impl Fn(&mut SchemeConfig)) -> bool {
    let g = FrequencyGrid::new(1.0, 3000.0, 25, Spacing::Logarithmic).unwrap();
    let mut worse = base.clone();
    bump(&mut worse);
    let a = budget(base, &g).unwrap();
    let b = budget(&worse, &g).unwrap();
    a.total.iter().zip(&b.total).all(|(x, y)| *y >= *x * (1.0 - 1e-12))
}

fn perfect_configs() -> Vec<SchemeConfig> {
    vec![SchemeConfig::new(SchemeMode::VariationalReadout), SchemeConfig::new(SchemeMode::FdSqueezing)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn more_round_trip_loss_never_helps(e in 0.0f64..5e-5, de in 0.0f64..5e-5) {
        for mut cfg in perfect_configs() {
            cfg.omfc.round_trip_loss = e;
            prop_assert!(monotone(&cfg, |c| c.omfc.round_trip_loss += de));
        }
    }

    #[test]
    fn warmer_bath_never_helps(t in 0.0f64..5.0, dt in 0.0f64..5.0) {
        for mut cfg in perfect_configs() {
            cfg.omfc.temperature = t;
            prop_assert!(monotone(&cfg, |c| c.omfc.temperature += dt));
        }
    }

    #[test]
    fn more_jitter_never_helps(j in 0.0f64..1e-2, dj in 0.0f64..1e-2) {
        for mut cfg in perfect_configs() {
            cfg.angle_jitter = j;
            prop_assert!(monotone(&cfg, |c| c.angle_jitter += dj));
        }
    }

    #[test]
    fn more_detector_loss_never_helps(e in 0.0f64..0.05, de in 0.0f64..0.05) {
        for mut cfg in perfect_configs() {
            cfg.ifo.circulator_loss = e;
            cfg.ifo.external_loss = e;
            prop_assert!(monotone(&cfg, |c| c.ifo.circulator_loss += de));
            prop_assert!(monotone(&cfg, |c| c.ifo.external_loss += de));
        }
    }
}
