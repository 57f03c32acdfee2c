use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fde_density::experiment::{run_experiment, ExperimentConfig};
use fde_density::fbm::{FbmGenerator, HurstIndex, TimeGrid};
use fde_density::parallel::{map_indexed, Execution};

fn replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiment_fig1_r16");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut cfg = ExperimentConfig::paper_figure(1).unwrap();
        cfg.replications = 16;
        cfg.m_values = vec![25, 30, 35];
        cfg.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| run_experiment(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn fbm_paths(c: &mut Criterion) {
    let grid = TimeGrid::new(1000, 0.1).unwrap();
    let gen = FbmGenerator::new(grid, HurstIndex::new(0.7).unwrap()).unwrap();
    let mut group = c.benchmark_group("fbm_paths_n1000_x64");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| map_indexed(64, exec, |i| gen.sample(i as u64).values[999]))
        });
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("cholesky_setup");
    group.sample_size(10);
    for n in [250usize, 1000] {
        let grid = TimeGrid::new(n, 100.0 / n as f64).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| FbmGenerator::new(*grid, HurstIndex::new(0.7).unwrap()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, replicates, fbm_paths, factorization);
criterion_main!(benches);
