//! Design-pipeline and harness benchmarks.
//!
//! The harness group compares the default rayon pool against a single
//! thread on the same configuration; building with `--no-default-features`
//! benches the rayon-free sequential path instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bdris_core::channels::{sample_channels, PropagationConfig, Seed};
use bdris_core::experiment::{run_experiment, ExperimentConfig, Preset, Scheme};
use bdris_core::ls_solver::ls_design;
use bdris_core::scattering::scattering_from_susceptance;
use bdris_core::topology::ArchitectureSpec;
use bdris_core::SystemDims;

fn bench_scattering(c: &mut Criterion) {
    let mut group = c.benchmark_group("scattering_from_susceptance");
    for &n in &[16usize, 64] {
        let b = nalgebra::DMatrix::from_fn(n, n, |i, j| ((i * n + j) as f64 * 0.73).sin());
        let b = (&b + b.transpose()) * 0.5;
        group.bench_with_input(BenchmarkId::from_parameter(n), &b, |bench, b| {
            bench.iter(|| scattering_from_susceptance(b, 50.0).unwrap())
        });
    }
    group.finish();
}

fn bench_ls_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("ls_design_q7");
    group.sample_size(20);
    let prop = PropagationConfig::default();
    for &n in &[16usize, 32] {
        let dims = SystemDims::new(n, 4, 4);
        let ch = sample_channels(dims, &prop, Seed(42)).unwrap();
        let spec = ArchitectureSpec::q_stem(7, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &ch, |bench, ch| {
            bench.iter(|| ls_design(ch, &spec, 50.0).unwrap())
        });
    }
    group.finish();
}

fn harness_config() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::Custom,
        dims_grid: vec![SystemDims::new(8, 2, 2)],
        q_grid: vec![1, 3],
        schemes: vec![Scheme::Ls, Scheme::UpperBound],
        realizations: 16,
        base_seed: Seed(7),
        ..ExperimentConfig::default()
    }
}

#[cfg(feature = "parallel")]
fn bench_harness(c: &mut Criterion) {
    let cfg = harness_config();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    group.bench_function("sequential_1_thread", |b| {
        b.iter(|| single.install(|| run_experiment(&cfg).unwrap()))
    });
    group.bench_function("parallel_default_pool", |b| {
        b.iter(|| run_experiment(&cfg).unwrap())
    });
    group.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench_harness(c: &mut Criterion) {
    let cfg = harness_config();
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    group.bench_function("sequential_no_rayon", |b| {
        b.iter(|| run_experiment(&cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_scattering, bench_ls_design, bench_harness);
criterion_main!(benches);
