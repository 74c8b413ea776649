use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tfa_bench::{bench_options, feasible_ring};
use tfa_core::cuts::{find_cut, CutStrategy};
use tfa_core::oracle::{exact_fixpoint, linearize};
use tfa_core::solvers::{run_alt, run_async, run_fptfa, run_sync, Schedule};

fn solver_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("ring");
    for n in [5, 15, 25] {
        let net = feasible_ring(n);
        let opts = bench_options();
        let cut = find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap();
        group.bench_with_input(BenchmarkId::new("sync", n), &n, |b, _| {
            b.iter(|| black_box(run_sync(&net, &opts).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("alt", n), &n, |b, _| {
            b.iter(|| black_box(run_alt(&net, &opts).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("async-rr", n), &n, |b, _| {
            b.iter(|| black_box(run_async(&net, &Schedule::RoundRobin, &opts).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("fptfa", n), &n, |b, _| {
            b.iter(|| black_box(run_fptfa(&net, &cut, &opts).unwrap()))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("oracle");
    for n in [5, 15, 25] {
        let net = feasible_ring(n);
        let sys = linearize(&net).unwrap();
        group.bench_with_input(BenchmarkId::new("exact-fixpoint", n), &n, |b, _| {
            b.iter(|| black_box(exact_fixpoint(&sys).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, solver_benches);
criterion_main!(benches);
