use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use bjortho::convex1d::minimize_convex;
use bjortho::extension::{
    envelope, is_bj_extension_bruteforce, is_bj_extension_criterion, symmetric_grid,
    DEFAULT_T_GRID_LEN,
};
use bjortho::fixtures::random_kink_curve;
use bjortho::norms::NormTag;
use bjortho::operators::{bj_operator_oracle, spectral_norm, MatrixPair};
use bjortho_bench::shifted_abs_extension;
use nalgebra::DMatrix;

fn bench_envelope(c: &mut Criterion) {
    let mut group = c.benchmark_group("envelope");
    for n in [201usize, 1001] {
        let (_, ext) = shifted_abs_extension(n);
        let grid = symmetric_grid(ext.t_half_width(), DEFAULT_T_GRID_LEN);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| envelope(black_box(&ext), black_box(&grid)))
        });
    }
    group.finish();
}

fn bench_verdicts(c: &mut Criterion) {
    let (_, ext) = shifted_abs_extension(201);
    let grid = symmetric_grid(ext.t_half_width(), DEFAULT_T_GRID_LEN);
    c.bench_function("bruteforce_verdict", |b| {
        b.iter(|| is_bj_extension_bruteforce(black_box(&ext), black_box(&grid), 1e-9).unwrap())
    });
    c.bench_function("criterion_verdict", |b| {
        b.iter(|| is_bj_extension_criterion(black_box(&ext), 1e-9).unwrap())
    });
}

fn bench_minimizer(c: &mut Criterion) {
    let curve = random_kink_curve(7);
    c.bench_function("minimize_convex", |b| {
        b.iter(|| minimize_convex(black_box(&curve), 1e-9).unwrap())
    });
}

fn bench_operator_norms(c: &mut Criterion) {
    let a = DMatrix::from_fn(4, 4, |i, j| ((3 * i + j) as f64 * 0.7).sin());
    c.bench_function("spectral_norm_4x4", |b| {
        b.iter(|| spectral_norm(black_box(&a), 1e-10).unwrap())
    });

    let reflection = DMatrix::from_fn(2, 2, |i, j| if i == j { 1.0 - 2.0 * i as f64 } else { 0.0 });
    let pair = MatrixPair::new(DMatrix::identity(2, 2), reflection, NormTag::Euclidean).unwrap();
    c.bench_function("operator_oracle_2x2", |b| {
        b.iter(|| bj_operator_oracle(black_box(&pair), 1e-9).unwrap())
    });
}

criterion_group!(
    benches,
    bench_envelope,
    bench_verdicts,
    bench_minimizer,
    bench_operator_norms
);
criterion_main!(benches);
