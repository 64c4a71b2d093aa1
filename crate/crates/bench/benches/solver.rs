use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use cocluster::solver::{run_basic, run_complete};
use cocluster::{build_graph, compute_weights, SolverConfig, WeightScheme};
use cocluster_bench::{edge_list, random_graph};

const SIZES: [usize; 3] = [10_000, 100_000, 400_000];

fn bench_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_graph");
    for &n in &SIZES {
        let edges = edge_list(&random_graph(n, 1));
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &edges, |b, edges| {
            b.iter(|| build_graph(black_box(edges)).unwrap())
        });
    }
    group.finish();
}

fn bench_basic(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_basic");
    group.sample_size(10);
    for &n in &SIZES {
        let g = random_graph(n, 2);
        let w = compute_weights(&g, &WeightScheme::Hws).unwrap();
        let cfg = SolverConfig::new(7.57, 1);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| run_basic(black_box(g), &w, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_complete(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_complete");
    group.sample_size(10);
    let n = 100_000;
    let g = random_graph(n, 3);
    let w = compute_weights(&g, &WeightScheme::Hws).unwrap();
    let mut cfg = SolverConfig::new(7.57, g.n_users());
    cfg.scu = true;
    cfg.dim = Some(64);
    group.throughput(Throughput::Elements(n as u64));
    group.bench_function(BenchmarkId::from_parameter(n), |b| {
        b.iter(|| run_complete(black_box(&g), &w, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_build, bench_basic, bench_complete);
criterion_main!(benches);
