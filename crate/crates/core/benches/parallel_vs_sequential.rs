//! Parallel and sequential execution of the data-parallel hot paths. Without
//! the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cogharvest::allocation::{allocate_efm, initial_thetas};
use cogharvest::oracle::{exhaustive_allocation_with, GridSpec};
use cogharvest::scenario::{experiment_config, generate_scenario, run_experiment_with, ScenarioConfig};
use cogharvest::structopt::{dual_subgradient_solve, DualConfig};
use cogharvest::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn exhaustive(c: &mut Criterion) {
    let cfg = ScenarioConfig {
        num_sus: 3,
        num_rt_sus: 3,
        num_subchannels: 7,
        num_available: 7,
        ..ScenarioConfig::default()
    };
    let sc = generate_scenario(&cfg).unwrap();
    let init = initial_thetas(&sc).unwrap();
    let grid = GridSpec::default();
    let mut group = c.benchmark_group("exhaustive_allocation");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exhaustive_allocation_with(&sc, &init, &grid, exec).unwrap())
        });
    }
    group.finish();
}

fn dual_solve(c: &mut Criterion) {
    let cfg = ScenarioConfig {
        num_sus: 32,
        num_rt_sus: 16,
        num_subchannels: 128,
        num_available: 128,
        ..ScenarioConfig::default()
    };
    let sc = generate_scenario(&cfg).unwrap();
    let alloc = allocate_efm(&sc, &initial_thetas(&sc).unwrap()).unwrap();
    let mut group = c.benchmark_group("dual_subgradient");
    group.sample_size(10);
    for (name, exec) in MODES {
        let dual = DualConfig {
            execution: exec,
            max_iterations: 200,
            ..DualConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &dual, |b, dual| {
            b.iter(|| dual_subgradient_solve(&sc, &alloc, dual).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let cfg = experiment_config("sumrate-vs-users").unwrap();
    let mut group = c.benchmark_group("sumrate_vs_users_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_experiment_with("sumrate-vs-users", &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exhaustive, dual_solve, sweep);
criterion_main!(benches);
