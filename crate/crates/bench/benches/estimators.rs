use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::hint::black_box;

use hmimo_core::channel::{build_covariance, QuadratureSpec, ScatteringProfile, ScenarioParams, UlaGeometry};
use hmimo_core::estimators::{dft_precompute, iso_basis, iso_precompute, ls_operator, mmse_precompute};
use hmimo_core::CVector;

fn setup(n: usize) -> (UlaGeometry, hmimo_core::SpatialCovariance, ScenarioParams, CVector) {
    let geom = UlaGeometry::new(n, 0.025, 0.1, 10.0).unwrap();
    let profile = ScatteringProfile::new((-30f64).to_radians(), 10f64.to_radians(), 1e-9).unwrap();
    let cov = build_covariance(&geom, &profile, &QuadratureSpec::default()).unwrap();
    let params = ScenarioParams::default();
    let y = CVector::from_fn(n, |i, _| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos()));
    (geom, cov, params, y)
}

fn precompute(c: &mut Criterion) {
    let mut g = c.benchmark_group("precompute");
    g.sample_size(10);
    for n in [64, 128, 256, 512] {
        let (geom, cov, params, _) = setup(n);
        let r = cov.matrix();
        g.bench_with_input(BenchmarkId::new("MMSE", n), &n, |b, _| b.iter(|| mmse_precompute(black_box(&r), &params).unwrap()));
        g.bench_with_input(BenchmarkId::new("ISO", n), &n, |b, _| {
            b.iter(|| iso_precompute(&iso_basis(black_box(&geom), 1e-6).unwrap(), &params, None))
        });
        g.bench_with_input(BenchmarkId::new("DFT", n), &n, |b, _| b.iter(|| dft_precompute(black_box(cov.lags()), &params).unwrap()));
    }
    g.finish();
}

fn apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply");
    for n in [64, 256, 1024, 4096] {
        let (_, cov, params, y) = setup(n);
        let dft = dft_precompute(cov.lags(), &params).unwrap();
        let ls = ls_operator(n, &params);
        g.bench_with_input(BenchmarkId::new("DFT", n), &n, |b, _| b.iter(|| dft.apply(black_box(&y)).unwrap()));
        g.bench_with_input(BenchmarkId::new("LS", n), &n, |b, _| b.iter(|| ls.apply(black_box(&y)).unwrap()));
        if n <= 1024 {
            let mmse = mmse_precompute(&cov.matrix(), &params).unwrap();
            g.bench_with_input(BenchmarkId::new("MMSE", n), &n, |b, _| b.iter(|| mmse.apply(black_box(&y)).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, precompute, apply);
criterion_main!(benches);
