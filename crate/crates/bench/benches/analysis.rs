use std::hint::black_box;

use commute_bench::chain;
use commute_core::{
    default_psd_tol, embed, estimate_commute_paint, fundamental_matrix, minimax_verify,
    monotonicity_experiment, CommuteStructure, MonotonicityConfig,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn fundamental(c: &mut Criterion) {
    let mut group = c.benchmark_group("fundamental_matrix");
    for n in [4, 12, 48] {
        let chain = chain(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &chain, |b, chain| {
            b.iter(|| fundamental_matrix(black_box(chain)).unwrap())
        });
    }
    group.finish();
}

fn embedding(c: &mut Criterion) {
    let mut group = c.benchmark_group("embed");
    for n in [4, 12, 48] {
        let z = fundamental_matrix(&chain(n, 2)).unwrap();
        let t = CommuteStructure::new(&z).commute().clone();
        let tol = default_psd_tol(&t);
        group.bench_with_input(BenchmarkId::from_parameter(n), &t, |b, t| {
            b.iter(|| embed(black_box(t), 0, tol).unwrap())
        });
    }
    group.finish();
}

fn structure(c: &mut Criterion) {
    let chain = chain(8, 3);
    c.bench_function("minimax_verify/n8/100", |b| {
        b.iter(|| minimax_verify(black_box(&chain), 0, 7, 100, 0).unwrap())
    });
    c.bench_function("monotonicity/n8/20", |b| {
        b.iter(|| {
            monotonicity_experiment(black_box(&chain), MonotonicityConfig::new(20, 0)).unwrap()
        })
    });
}

fn monte_carlo(c: &mut Criterion) {
    let chain = chain(8, 4);
    c.bench_function("paint/n8/100k", |b| {
        b.iter(|| estimate_commute_paint(black_box(&chain), 0, 1, 100_000, 5).unwrap())
    });
}

criterion_group!(benches, fundamental, embedding, structure, monte_carlo);
criterion_main!(benches);
