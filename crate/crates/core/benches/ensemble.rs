use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use yule_core::exact::{expected_cond_variance, MomentTable};
use yule_core::experiments::simulate_ensemble;
use yule_core::sim::DEFAULT_MAX_LEAVES;
use yule_core::stats::bootstrap_ci_variance_with;
use yule_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble_lambda_t_6");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| simulate_ensemble(1.0, 6.0, 1000, 1, DEFAULT_MAX_LEAVES, exec).unwrap())
        });
    }
    group.finish();
}

fn bootstrap(c: &mut Criterion) {
    let values = simulate_ensemble(1.0, 4.0, 10_000, 2, DEFAULT_MAX_LEAVES, Exec::Parallel)
        .unwrap()
        .into_iter()
        .map(|o| o.avg_depth)
        .collect::<Vec<_>>();
    let mut group = c.benchmark_group("bootstrap_n1e4_b1000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| bootstrap_ci_variance_with(black_box(&values), 1000, 0.05, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    c.bench_function("moment_table_1e6", |b| b.iter(|| MomentTable::new(black_box(1_000_000)).unwrap()));
    c.bench_function("expected_cond_variance_lambda_t_10", |b| {
        b.iter(|| expected_cond_variance(1.0, black_box(10.0)).unwrap())
    });
}

criterion_group!(benches, ensemble, bootstrap, exact);
criterion_main!(benches);
