//! Sketch-set construction over graphs.
//!
//! Two algorithms are provided. The first runs one pruned single-source
//! shortest-path sweep per node, visiting sources in increasing rank order
//! and cutting the search wherever the visited node's sketch already holds
//! k closer entries. The second is node-centric: accepted entries propagate
//! to neighbors in synchronized rounds until a fixpoint, optionally with a
//! `(1+eps)` slack on the acceptance radius that trades sketch accuracy for
//! fewer updates.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::ads::{Ads, AdsSet};
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph};
use crate::minhash::SketchConfig;
use crate::rank::{NodeId, RankKey, RankMode};
use crate::weighted::NodeWeights;

/// Counters reported by a build.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Edge relaxations performed.
    pub relaxations: u64,
    /// Membership-test invocations (attempted sketch updates).
    pub insert_tests: u64,
    /// Synchronized rounds until fixpoint (0 for the sweep algorithm).
    pub rounds: u32,
}

pub(crate) struct CompTable {
    pub payload: Vec<u64>,
    pub key: Vec<RankKey>,
}

pub(crate) fn hash_tables(n: usize, cfg: &SketchConfig) -> Vec<CompTable> {
    (0..cfg.comp_count())
        .map(|comp| {
            let mut payload = Vec::with_capacity(n);
            let mut key = Vec::with_capacity(n);
            for v in 0..n as u64 {
                let (p, k) = cfg.hash_key(comp, NodeId(v));
                payload.push(p);
                key.push(k);
            }
            CompTable { payload, key }
        })
        .collect()
}

pub(crate) fn weighted_tables(
    n: usize,
    cfg: &SketchConfig,
    weights: &NodeWeights,
) -> Result<Vec<CompTable>> {
    let mut payload = Vec::with_capacity(n);
    let mut key = Vec::with_capacity(n);
    for v in 0..n as u64 {
        let r = crate::rank::weighted_rank(NodeId(v), weights.get(NodeId(v)), cfg.seed)?;
        payload.push(r.value.to_bits());
        key.push(RankKey {
            value: r.value,
            tie: v,
        });
    }
    Ok(vec![CompTable { payload, key }])
}

fn tables_for(
    g: &Graph,
    cfg: &SketchConfig,
    weights: Option<&NodeWeights>,
) -> Result<Vec<CompTable>> {
    match cfg.mode {
        RankMode::Weighted => {
            let w = weights.ok_or_else(|| {
                Error::InvalidParameter("weighted construction needs node weights".into())
            })?;
            weighted_tables(g.node_count(), cfg, w)
        }
        _ => Ok(hash_tables(g.node_count(), cfg)),
    }
}

/// Build the sketch set by pruned shortest-path sweeps (one per node, in
/// increasing rank order). Not available for discretized ranks: rank ties
/// would make the rank-ordered sweep diverge from the membership law; use
/// [`build_local_updates`] there.
pub fn build_pruned_dijkstra(
    g: &Graph,
    cfg: &SketchConfig,
    dir: Direction,
) -> Result<(AdsSet, BuildStats)> {
    cfg.validate()?;
    if matches!(cfg.mode, RankMode::Pow2Root(_)) {
        return Err(Error::Unsupported(
            "discretized ranks carry ties; build with local updates instead".into(),
        ));
    }
    if cfg.mode == RankMode::Weighted {
        return Err(Error::InvalidParameter(
            "weighted sketches are built through the weighted builder".into(),
        ));
    }
    let tables = tables_for(g, cfg, None)?;
    Ok(pruned_dijkstra_with(g, cfg, dir, &tables))
}

pub(crate) fn pruned_dijkstra_with(
    g: &Graph,
    cfg: &SketchConfig,
    dir: Direction,
    tables: &[CompTable],
) -> (AdsSet, BuildStats) {
    let n = g.node_count();
    let mut stats = BuildStats::default();
    let mut ads: Vec<Ads> = (0..n as u64)
        .map(|v| Ads::new_graph(*cfg, NodeId(v)))
        .collect();

    let mut dist = vec![f64::INFINITY; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();

    for (comp, table) in tables.iter().enumerate() {
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| table.key[a as usize].cmp(&table.key[b as usize]));

        for &src in &order {
            let src_node = NodeId(src as u64);
            let payload = table.payload[src as usize];
            dist[src as usize] = 0.0;
            touched.push(src);
            heap.push(Reverse((0u64, src)));
            while let Some(Reverse((dbits, v))) = heap.pop() {
                let d = f64::from_bits(dbits);
                if d > dist[v as usize] {
                    continue;
                }
                stats.insert_tests += 1;
                // Sources arrive in increasing rank, so "k closer entries
                // already present" is exactly the membership test.
                if ads[v as usize].count_closer(comp, src_node, d) >= cfg.comp_k() {
                    continue; // prune: do not relax past v
                }
                ads[v as usize].push_sorted(comp, src_node, payload, d);
                for (y, w) in g.collect_edges(v as usize, dir) {
                    stats.relaxations += 1;
                    let nd = d + w;
                    if nd < dist[y as usize] {
                        if dist[y as usize].is_infinite() {
                            touched.push(y);
                        }
                        dist[y as usize] = nd;
                        heap.push(Reverse((nd.to_bits(), y)));
                    }
                }
            }
            for &t in &touched {
                dist[t as usize] = f64::INFINITY;
            }
            touched.clear();
        }
    }
    (AdsSet::from_parts(*cfg, dir, ads), stats)
}

/// Build the sketch set by synchronized local updates: every accepted entry
/// is forwarded to neighbors with the edge length added, and each sketch is
/// cleaned of dominated entries after every acceptance. With `eps = 0` the
/// fixpoint equals the sweep algorithm's output exactly; with `eps > 0`
/// acceptance uses a `(1+eps)` radius slack and the result satisfies the
/// relaxed membership law.
pub fn build_local_updates(
    g: &Graph,
    cfg: &SketchConfig,
    dir: Direction,
    eps: f64,
) -> Result<(AdsSet, BuildStats)> {
    cfg.validate()?;
    if cfg.mode == RankMode::Weighted {
        return Err(Error::InvalidParameter(
            "weighted sketches are built through the weighted builder".into(),
        ));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    if eps > 0.0 {
        let mut wmin = f64::INFINITY;
        let mut wmax = 0.0f64;
        for v in 0..g.node_count() {
            for (_, w) in g.out(v, Direction::Forward) {
                wmin = wmin.min(w);
                wmax = wmax.max(w);
            }
        }
        let nf = g.node_count() as f64;
        if wmax > 0.0 && wmax / wmin > nf.powi(4) {
            return Err(Error::InvalidParameter(
                "edge length ratio exceeds n^4; approximate construction rejected".into(),
            ));
        }
    }
    let tables = tables_for(g, cfg, None)?;
    local_updates_with(g, cfg, dir, eps, &tables)
}

pub(crate) fn local_updates_with(
    g: &Graph,
    cfg: &SketchConfig,
    dir: Direction,
    eps: f64,
    tables: &[CompTable],
) -> Result<(AdsSet, BuildStats)> {
    let n = g.node_count();
    let mut stats = BuildStats::default();
    let mut ads: Vec<Ads> = (0..n as u64)
        .map(|v| Ads::new_graph(*cfg, NodeId(v)))
        .collect();

    for (comp, table) in tables.iter().enumerate() {
        // (holder, origin, distance) of entries accepted last round
        let mut pending: Vec<(u32, u32, f64)> = Vec::new();
        for v in 0..n as u32 {
            let node = NodeId(v as u64);
            ads[v as usize].push_sorted(comp, node, table.payload[v as usize], 0.0);
            pending.push((v, v, 0.0));
        }
        // rounds counts synchronized rounds in which some sketch changed;
        // the final empty delivery that detects the fixpoint is not counted
        let mut rounds = 0u32;
        let mut guard = 0u32;
        while !pending.is_empty() {
            guard += 1;
            if guard > n as u32 + 1 {
                return Err(Error::Internal(format!(
                    "local updates did not stabilize within {} rounds",
                    n + 1
                )));
            }
            let mut inbox: Vec<(u32, u32, f64)> = Vec::new();
            for &(holder, origin, d) in &pending {
                for (y, w) in g.collect_edges(holder as usize, dir) {
                    inbox.push((y, origin, d + w));
                }
            }
            pending.clear();
            inbox.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.total_cmp(&b.2)).then(a.1.cmp(&b.1)));
            stats.relaxations += inbox.len() as u64;
            for (target, origin, d) in inbox {
                stats.insert_tests += 1;
                let origin_node = NodeId(origin as u64);
                let sketch = &mut ads[target as usize];
                if let Some(d_old) = sketch.contains(comp, origin_node) {
                    if d_old <= d {
                        continue;
                    }
                    sketch.remove(comp, origin_node);
                }
                let key = table.key[origin as usize];
                if sketch.insert_keyed(
                    comp,
                    origin_node,
                    table.payload[origin as usize],
                    key,
                    d,
                    eps,
                ) {
                    sketch.cleanup(comp);
                    pending.push((target, origin, d));
                }
            }
            if !pending.is_empty() {
                rounds += 1;
            }
        }
        stats.rounds = stats.rounds.max(rounds);
    }
    Ok((AdsSet::from_parts(*cfg, dir, ads), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minhash::Flavor;

    fn bottomk(k: usize, seed: u64) -> SketchConfig {
        SketchConfig::new(Flavor::BottomK, k, RankMode::Full, seed).unwrap()
    }

    #[test]
    fn single_node_graph() {
        let g = Graph::from_arcs(1, &[], false).unwrap();
        let (set, _) = build_pruned_dijkstra(&g, &bottomk(3, 1), Direction::Forward).unwrap();
        let ads = set.node(NodeId(0)).unwrap();
        assert_eq!(ads.size(), 1);
        assert_eq!(ads.entries()[0].node, NodeId(0));
        assert_eq!(ads.entries()[0].distance, 0.0);
    }

    #[test]
    fn k_at_least_n_keeps_everything_with_exact_distances() {
        // path 0 - 1 - 2 - 3 with unit lengths
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n", true).unwrap();
        let (set, _) = build_pruned_dijkstra(&g, &bottomk(8, 3), Direction::Forward).unwrap();
        for v in 0..4u64 {
            let ads = set.node(NodeId(v)).unwrap();
            assert_eq!(ads.size(), 4);
            for e in ads.entries() {
                assert_eq!(
                    e.distance,
                    (e.node.0 as i64 - v as i64).unsigned_abs() as f64
                );
            }
        }
    }

    #[test]
    fn local_updates_matches_sweep_on_a_path() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 4\n", true).unwrap();
        let cfg = bottomk(2, 11);
        let (a, _) = build_pruned_dijkstra(&g, &cfg, Direction::Forward).unwrap();
        let (b, stats) = build_local_updates(&g, &cfg, Direction::Forward, 0.0).unwrap();
        assert_eq!(a, b);
        // updates settle within the hop diameter of the 5-node path
        assert!(stats.rounds <= 4, "rounds {}", stats.rounds);
    }

    #[test]
    fn directions_differ_on_a_one_way_cycle_fragment() {
        let g = Graph::parse_edge_list("0 1\n1 2\n", false).unwrap();
        let cfg = bottomk(4, 2);
        let (fwd, _) = build_pruned_dijkstra(&g, &cfg, Direction::Forward).unwrap();
        let (bwd, _) = build_pruned_dijkstra(&g, &cfg, Direction::Backward).unwrap();
        assert_eq!(fwd.node(NodeId(0)).unwrap().size(), 3); // reaches 0,1,2
        assert_eq!(bwd.node(NodeId(0)).unwrap().size(), 1); // only itself reaches 0
        assert_eq!(bwd.node(NodeId(2)).unwrap().size(), 3);
    }

    #[test]
    fn discretized_ranks_refuse_the_sweep_builder() {
        let g = Graph::parse_edge_list("0 1\n", true).unwrap();
        let cfg = SketchConfig::new(Flavor::BottomK, 2, RankMode::Pow2Root(1), 5).unwrap();
        assert!(build_pruned_dijkstra(&g, &cfg, Direction::Forward).is_err());
        assert!(build_local_updates(&g, &cfg, Direction::Forward, 0.0).is_ok());
    }
}
