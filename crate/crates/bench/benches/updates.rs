use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};

use dynmis_bench::{replayed_graph, stream};
use dynmis_core::offline::{build_rejection, build_subset, BuildConfig};
use dynmis_core::{DynamicGraph, DynamicMis, OpKind, PoolConfig, RunPool};

fn offline_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    for &n in &[256usize, 1024] {
        let g = replayed_graph(n, 8 * n, 1);
        let cfg = BuildConfig::with_seed(1);
        group.bench_with_input(BenchmarkId::new("rejection", n), &g, |b, g| {
            b.iter(|| black_box(build_rejection(g, &cfg, &mut cfg.rng())))
        });
        group.bench_with_input(BenchmarkId::new("subset", n), &g, |b, g| {
            b.iter(|| black_box(build_subset(g, &cfg, &mut cfg.rng())))
        });
    }
    group.finish();
}

fn engine_updates(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine");
    for &n in &[256usize, 1024, 4096] {
        let s = stream(n, 5000, 2);
        group.throughput(Throughput::Elements(s.ops.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter_batched(
                || DynamicMis::new(DynamicGraph::new(s.n).unwrap(), BuildConfig::with_seed(2)),
                |mut eng| {
                    for op in &s.ops {
                        let rep = match op.kind {
                            OpKind::Insert => eng.on_insert(op.edge),
                            OpKind::Delete => eng.on_delete(op.edge),
                        };
                        black_box(rep.unwrap());
                    }
                    eng
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn pool_updates(c: &mut Criterion) {
    let mut group = c.benchmark_group("pool");
    group.sample_size(10);
    let s = stream(256, 2000, 3);
    group.throughput(Throughput::Elements(s.ops.len() as u64));
    for parallel in [false, true] {
        let cfg = PoolConfig { seed: 3, parallel, ..Default::default() };
        group.bench_function(if parallel { "parallel" } else { "serial" }, |b| {
            b.iter_batched(
                || RunPool::new(s.n, [], cfg.clone()).unwrap(),
                |mut pool| {
                    for &op in &s.ops {
                        black_box(pool.apply_update(op).unwrap());
                    }
                    pool
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, offline_build, engine_updates, pool_updates);
criterion_main!(benches);
