//! Benchmark-only crate; see `benches/sketches.rs`.

use adsketch::{Graph, SplitMix64};

/// Random ring-plus-chords graph; everything reachable, small integer lengths.
pub fn bench_graph(n: u64, extra_arcs: u64, seed: u64) -> Graph {
    let mut rng = SplitMix64::new(seed);
    let mut arcs: Vec<(u64, u64, f64)> = (0..n).map(|v| (v, (v + 1) % n, 1.0)).collect();
    for _ in 0..extra_arcs {
        let u = rng.next_below(n);
        let v = rng.next_below(n);
        if u != v {
            arcs.push((u, v, (1 + rng.next_below(9)) as f64));
        }
    }
    Graph::from_arcs(n as usize, &arcs, false).unwrap()
}
