use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use quasineutral::ep::ep_rhs;
use quasineutral::mhd::mhd_rhs;
use quasineutral::models::quasilinear_residual;
use quasineutral::time::step_rk4;
use quasineutral::ModelParams;
use quasineutral_bench::orszag_tang;

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_roundtrip");
    for n in [32, 64, 128] {
        let (grid, state) = orszag_tang(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| grid.inverse(&grid.forward(black_box(&state.n))))
        });
    }
    group.finish();
}

fn tendencies(c: &mut Criterion) {
    let params = ModelParams::default();
    let mut group = c.benchmark_group("rhs");
    for n in [32, 64] {
        let (grid, state) = orszag_tang(n);
        group.bench_with_input(BenchmarkId::new("ep", n), &n, |b, _| {
            b.iter(|| ep_rhs(&grid, black_box(&state), &params).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mhd", n), &n, |b, _| {
            b.iter(|| mhd_rhs(&grid, black_box(&state.u), &state.b, true))
        });
    }
    group.finish();
}

fn stepping(c: &mut Criterion) {
    let params = ModelParams::default();
    let (grid, state) = orszag_tang(64);
    c.bench_function("rk4_step_ep_64", |b| {
        b.iter(|| step_rk4(black_box(&state), 0.0, 1e-3, |s| ep_rhs(&grid, s, &params)).unwrap())
    });
    c.bench_function("quasilinear_residual_64", |b| {
        b.iter(|| quasilinear_residual(&grid, black_box(&state), &params).unwrap())
    });
}

criterion_group!(benches, transforms, tendencies, stepping);
criterion_main!(benches);
