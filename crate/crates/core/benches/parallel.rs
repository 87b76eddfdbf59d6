use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hsfluct::dynamics::run_flow;
use hsfluct::ensemble::{sample_replica, EnsembleParams};
use hsfluct::linearized::{semigroup_mc, SemigroupParams};
use hsfluct::par::map_sequential;
use hsfluct::test_function::TestFunction;
use hsfluct::Dim;

fn replica_events(params: &EnsembleParams, i: usize) -> usize {
    let c = sample_replica(params, i as u64).unwrap();
    run_flow(&c, 0.2).unwrap().1.len()
}

fn replicas(c: &mut Criterion) {
    let mut group = c.benchmark_group("replica_flow");
    group.sample_size(10);
    for eps in [0.12, 0.08] {
        let params = EnsembleParams::boltzmann_grad(Dim::Three, eps, 1, 32).unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", eps), &params, |b, p| {
            b.iter(|| black_box(map_sequential(32, |i| replica_events(p, i))))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", eps), &params, |b, p| {
            b.iter(|| black_box(hsfluct::par::map_parallel(32, |i| replica_events(p, i))))
        });
    }
    group.finish();
}

fn semigroup(c: &mut Criterion) {
    // semigroup_mc goes through map_indexed, so this measures whichever
    // backend the build selected
    let g: TestFunction = "v1v2".parse().unwrap();
    let mut group = c.benchmark_group("semigroup_mc");
    group.sample_size(10);
    group.bench_function("t=0.3", |b| {
        b.iter(|| {
            black_box(
                semigroup_mc(&g, &g, &SemigroupParams::new(Dim::Three, 0.3, 4096, 1)).unwrap(),
            )
        })
    });
    group.finish();
}

criterion_group!(benches, replicas, semigroup);
criterion_main!(benches);
