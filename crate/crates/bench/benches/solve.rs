use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use blockaug::{fixtures, rcm_permutation, AugmentStrategy, OverSolver, Threading, UnderSolver};
use blockaug_bench::{over_system, under_matrix, under_system};

fn bench_augment(c: &mut Criterion) {
    let mut group = c.benchmark_group("augment_rows");
    for (name, strategy) in [
        ("sign-alternating", AugmentStrategy::SignAlternating),
        ("pairwise", AugmentStrategy::Pairwise),
    ] {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(under_system(120, 180, 6, 3, strategy, 1)));
        });
    }
    group.finish();
}

fn bench_schur_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("schur_assembly");
    for threading in [Threading::Sequential, Threading::Parallel] {
        let label = format!("{threading:?}").to_lowercase();
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter_batched(
                || under_system(120, 180, 6, 3, AugmentStrategy::Pairwise, 1),
                |sys| black_box(UnderSolver::new(sys, threading).unwrap()),
                criterion::BatchSize::SmallInput,
            );
        });
    }
    group.finish();
}

fn bench_solve_under(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_under");
    let b = fixtures::vector(120, 7);
    for threading in [Threading::Sequential, Threading::Parallel] {
        let solver = UnderSolver::new(
            under_system(120, 180, 6, 3, AugmentStrategy::SignAlternating, 1),
            threading,
        )
        .unwrap();
        let label = format!("{threading:?}").to_lowercase();
        group.bench_function(BenchmarkId::from_parameter(label), |bch| {
            bch.iter(|| black_box(solver.solve(black_box(&b)).unwrap()));
        });
    }
    group.finish();
}

fn bench_solve_over(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_over");
    let b = fixtures::vector(180, 11);
    for threading in [Threading::Sequential, Threading::Parallel] {
        let solver = OverSolver::new(
            over_system(180, 120, 6, 3, AugmentStrategy::Pairwise, 3),
            threading,
        )
        .unwrap();
        let label = format!("{threading:?}").to_lowercase();
        group.bench_function(BenchmarkId::from_parameter(label), |bch| {
            bch.iter(|| black_box(solver.solve(black_box(&b)).unwrap()));
        });
    }
    group.finish();
}

fn bench_rcm(c: &mut Criterion) {
    let m = under_matrix(150, 200, 8, 5);
    c.bench_function("rcm_permutation", |b| {
        b.iter(|| black_box(rcm_permutation(black_box(&m))));
    });
}

criterion_group!(
    benches,
    bench_augment,
    bench_schur_assembly,
    bench_solve_under,
    bench_solve_over,
    bench_rcm
);
criterion_main!(benches);
