//! Node-weighted sketches: ranks drawn from per-node exponential
//! distributions, so that heavier nodes are sampled more readily, and the
//! matching inverse-probability estimator for weighted neighborhoods.

use std::collections::HashMap;

use crate::ads::{Ads, AdsSet, KthTracker};
use crate::build::{pruned_dijkstra_with, weighted_tables, BuildStats};
use crate::error::{Error, Result};
use crate::estimate::{HipEntry, HipWeights};
use crate::graph::{Direction, Graph};
use crate::minhash::{Flavor, SketchConfig};
use crate::rank::{weighted_rank, NodeId, RankMode};

/// Positive node weights; nodes not present weigh 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeWeights {
    map: HashMap<u64, f64>,
}

impl NodeWeights {
    pub fn new() -> NodeWeights {
        NodeWeights::default()
    }

    pub fn set(&mut self, node: NodeId, beta: f64) -> Result<()> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weight of node {node} must be positive and finite, got {beta}"
            )));
        }
        self.map.insert(node.0, beta);
        Ok(())
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.map.get(&node.0).copied().unwrap_or(1.0)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Parse lines of `nodeId beta`, `#` comments allowed.
    pub fn parse(text: &str) -> Result<NodeWeights> {
        let mut w = NodeWeights::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = |what: &str| Error::InvalidInput(format!("line {}: {what}", lineno + 1));
            let node: u64 = fields
                .next()
                .ok_or_else(|| bad("expected `node beta`"))?
                .parse()
                .map_err(|_| bad("bad node id"))?;
            let beta: f64 = fields
                .next()
                .ok_or_else(|| bad("expected `node beta`"))?
                .parse()
                .map_err(|_| bad("bad weight"))?;
            if fields.next().is_some() {
                return Err(bad("trailing fields"));
            }
            w.set(NodeId(node), beta)
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(w)
    }
}

/// Build bottom-k sketches under weighted ranks. The membership law is
/// unchanged; only the rank order differs.
pub fn build_weighted_ads(
    g: &Graph,
    weights: &NodeWeights,
    k: usize,
    seed: u64,
    dir: Direction,
) -> Result<(AdsSet, BuildStats)> {
    let cfg = SketchConfig::new(Flavor::BottomK, k, RankMode::Weighted, seed)?;
    let tables = weighted_tables(g.node_count(), &cfg, weights)?;
    Ok(pruned_dijkstra_with(g, &cfg, dir, &tables))
}

/// Adjusted weights for a weighted-rank sketch: scanning by distance, an
/// entry with weight `beta` and running k-th smallest closer rank `T` was
/// included with probability `1 - exp(-beta T)` (1 while fewer than k
/// closer entries exist), and contributes `beta / tau`. Sums of these
/// weights estimate total neighborhood weight.
pub fn hip_weighted(ads: &Ads, weights: &NodeWeights) -> Result<HipWeights> {
    let cfg = ads.config();
    if cfg.mode != RankMode::Weighted || cfg.flavor != Flavor::BottomK {
        return Err(Error::InvalidParameter(
            "weighted estimation applies to bottom-k weighted-rank sketches".into(),
        ));
    }
    let mut tracker = KthTracker::new(cfg.k);
    let mut out = Vec::with_capacity(ads.entries().len());
    for e in ads.entries() {
        let beta = weights.get(e.node);
        let expected = weighted_rank(e.node, beta, cfg.seed)?;
        if expected.value.to_bits() != e.rank_bits {
            return Err(Error::InvalidParameter(format!(
                "weights do not match the build: node {} rank differs",
                e.node
            )));
        }
        let tau = match tracker.kth() {
            None => 1.0,
            Some(kth) => 1.0 - (-beta * kth.value).exp(),
        };
        out.push(HipEntry {
            node: e.node,
            distance: e.distance,
            tau,
            weight: beta / tau,
        });
        tracker.push(cfg.key_from_payload(e.rank_bits, e.node));
    }
    Ok(HipWeights::from_entries(ads.owner(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_graph(n: usize) -> Graph {
        let arcs: Vec<(u64, u64, f64)> = (0..n as u64 - 1).map(|i| (i, i + 1, 1.0)).collect();
        Graph::from_arcs(n, &arcs, true).unwrap()
    }

    #[test]
    fn unit_weights_reduce_to_exponential_transform_order() {
        // With all beta = 1 the weighted rank order equals the uniform rank
        // order, so membership matches the unweighted build exactly.
        let g = line_graph(12);
        let weights = NodeWeights::new();
        let (wset, _) = build_weighted_ads(&g, &weights, 3, 42, Direction::Forward).unwrap();
        let cfg = SketchConfig::new(Flavor::BottomK, 3, RankMode::Full, 42).unwrap();
        let (uset, _) = crate::build::build_pruned_dijkstra(&g, &cfg, Direction::Forward).unwrap();
        for v in 0..12u64 {
            let wn: Vec<NodeId> = wset
                .node(NodeId(v))
                .unwrap()
                .entries()
                .iter()
                .map(|e| e.node)
                .collect();
            let un: Vec<NodeId> = uset
                .node(NodeId(v))
                .unwrap()
                .entries()
                .iter()
                .map(|e| e.node)
                .collect();
            assert_eq!(wn, un);
        }
    }

    #[test]
    fn heavy_node_is_always_sampled() {
        let g = line_graph(20);
        let mut weights = NodeWeights::new();
        weights.set(NodeId(13), 1e9).unwrap();
        let (set, _) = build_weighted_ads(&g, &weights, 1, 7, Direction::Forward).unwrap();
        for v in 0..20u64 {
            let ads = set.node(NodeId(v)).unwrap();
            assert!(
                ads.entries().iter().any(|e| e.node == NodeId(13)),
                "node 13 missing from sketch of {v}"
            );
        }
    }

    #[test]
    fn small_neighborhood_estimates_are_exact() {
        let g = line_graph(10);
        let weights = NodeWeights::new();
        let (set, _) = build_weighted_ads(&g, &weights, 4, 5, Direction::Forward).unwrap();
        // d = 1 covers 3 nodes of weight 1 each from the middle of the line
        let hw = hip_weighted(set.node(NodeId(5)).unwrap(), &weights).unwrap();
        assert!((hw.neighborhood(1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_weights_are_rejected() {
        let g = line_graph(6);
        let mut weights = NodeWeights::new();
        weights.set(NodeId(2), 3.0).unwrap();
        let (set, _) = build_weighted_ads(&g, &weights, 2, 5, Direction::Forward).unwrap();
        let mut other = NodeWeights::new();
        other.set(NodeId(2), 4.0).unwrap();
        let ads = set.node(NodeId(2)).unwrap();
        assert!(hip_weighted(ads, &weights).is_ok());
        assert!(hip_weighted(ads, &other).is_err());
    }

    #[test]
    fn parses_weight_files() {
        let w = NodeWeights::parse("# w\n3 2.5\n7 0.5\n").unwrap();
        assert_eq!(w.get(NodeId(3)), 2.5);
        assert_eq!(w.get(NodeId(99)), 1.0);
        assert!(NodeWeights::parse("3 -1\n").is_err());
        assert!(NodeWeights::parse("3\n").is_err());
    }
}
