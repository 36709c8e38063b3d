use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

use adsketch::{
    build_pruned_dijkstra, hip_weights, BottomKHipCounter, Direction, Flavor, HllHipCounter,
    Kernel, MorrisCounter, NodeId, RankMode, SketchConfig,
};
use adsketch_bench::bench_graph;

fn bench_build(c: &mut Criterion) {
    let g = bench_graph(2_000, 4_000, 7);
    let cfg = SketchConfig::new(Flavor::BottomK, 8, RankMode::Full, 1).unwrap();
    c.bench_function("build/pruned-dijkstra n=2000 k=8", |b| {
        b.iter(|| build_pruned_dijkstra(black_box(&g), &cfg, Direction::Forward).unwrap())
    });
}

fn bench_estimate(c: &mut Criterion) {
    let g = bench_graph(2_000, 4_000, 7);
    let cfg = SketchConfig::new(Flavor::BottomK, 16, RankMode::Full, 1).unwrap();
    let (set, _) = build_pruned_dijkstra(&g, &cfg, Direction::Forward).unwrap();
    let ads = set.node(NodeId(0)).unwrap();
    c.bench_function("estimate/hip-weights k=16", |b| {
        b.iter(|| hip_weights(black_box(ads)).unwrap())
    });
    let hw = hip_weights(ads).unwrap();
    c.bench_function("estimate/harmonic-centrality", |b| {
        b.iter(|| hw.centrality(&Kernel::Harmonic, |_| 1.0).unwrap())
    });
}

fn bench_counters(c: &mut Criterion) {
    let n = 100_000u64;
    let mut group = c.benchmark_group("distinct");
    group.throughput(Throughput::Elements(n));
    group.bench_function("hll-hip k=64", |b| {
        b.iter(|| {
            let mut counter = HllHipCounter::new(64, 3).unwrap();
            for i in 0..n {
                counter.offer(NodeId(i));
            }
            counter.estimate()
        })
    });
    group.bench_function("bottomk-hip k=64", |b| {
        b.iter(|| {
            let mut counter = BottomKHipCounter::new(64, 3).unwrap();
            for i in 0..n {
                counter.offer(NodeId(i));
            }
            counter.estimate()
        })
    });
    group.finish();

    c.bench_function("morris/add-unit b=1.0625", |b| {
        let mut counter = MorrisCounter::new(1.0625, 9).unwrap();
        b.iter(|| {
            counter.add(1.0).unwrap();
            counter.estimate()
        })
    });
}

criterion_group!(benches, bench_build, bench_estimate, bench_counters);
criterion_main!(benches);
