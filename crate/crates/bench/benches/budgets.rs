use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use omfc_core::omfc::{derive_rates, exact_conversion_rate, full_three_mode_solve};
use omfc_core::schemes::{budget, FilterPolicy};
use omfc_core::tuning::calibrate_filter;
use omfc_core::{FilterParams, FrequencyGrid, OmfcParams, SchemeConfig, SchemeMode, Spacing};

fn bench_budgets(c: &mut Criterion) {
    let mut group = c.benchmark_group("budget");
    let cavity = FilterPolicy::Cavity(FilterParams::new(-TAU * 30.0, TAU * 30.0).unwrap());
    for points in [50usize, 200, 1000] {
        let grid = FrequencyGrid::new(1.0, 5000.0, points, Spacing::Logarithmic).unwrap();
        for (name, cfg) in [
            ("fd_perfect", SchemeConfig::new(SchemeMode::FdSqueezing)),
            ("vr_perfect", SchemeConfig::new(SchemeMode::VariationalReadout)),
            ("vr_cavity", SchemeConfig { filter: cavity, ..SchemeConfig::new(SchemeMode::VariationalReadout) }),
        ] {
            group.bench_with_input(BenchmarkId::new(name, points), &grid, |b, g| b.iter(|| budget(black_box(&cfg), g).unwrap()));
        }
    }
    group.finish();
}

fn bench_converter(c: &mut Criterion) {
    let p = OmfcParams::default();
    let r = derive_rates(&p).unwrap();
    c.bench_function("converter/full_three_mode_solve", |b| {
        b.iter(|| full_three_mode_solve(&p, &r, black_box(TAU * 100.0)).unwrap())
    });
    c.bench_function("converter/exact_rate", |b| b.iter(|| exact_conversion_rate(&p, &r, black_box(TAU * 100.0)).unwrap()));
}

fn bench_calibration(c: &mut Criterion) {
    let cfg = SchemeConfig::new(SchemeMode::VariationalReadout);
    let mut group = c.benchmark_group("tuning");
    group.sample_size(10);
    group.bench_function("calibrate_filter", |b| b.iter(|| calibrate_filter(black_box(&cfg), 1.0, 30.0, 30).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_budgets, bench_converter, bench_calibration);
criterion_main!(benches);
