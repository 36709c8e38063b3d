//! All-distances sketching and cardinality estimation.
//!
//! The crate builds per-node samples of a graph's distance relation
//! (all-distances sketches) in three MinHash flavors, estimates
//! neighborhood cardinalities, closeness centralities, and general
//! distance statistics from them with inverse-probability weights, and
//! provides streaming distinct counters and approximate counters built
//! from the same machinery.
//!
//! Everything is deterministic given a seed: ranks, buckets, sketch
//! contents, and snapshot bytes reproduce exactly across runs.

// Validation sites use `!(x > 0.0)` so that NaN is rejected along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ads;
pub mod build;
pub mod distinct;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod minhash;
pub mod morris;
pub mod rank;
pub mod sim;
pub mod snapshot;
pub mod weighted;

pub use ads::{
    expected_ads_size, harmonic_number, stream_ads_first, stream_ads_recent, Ads, AdsEntry, AdsSet,
};
pub use build::{build_local_updates, build_pruned_dijkstra, BuildStats};
pub use distinct::{hll_baseline_estimate, BottomKHipCounter, HllHipCounter};
pub use error::{Error, Result};
pub use estimate::{
    hip_weights, size_estimate, DistanceWeights, HipEntry, HipWeights, Kernel, PermutationEstimator,
};
pub use graph::{Direction, Graph};
pub use minhash::{CardinalityEstimate, Flavor, MinHashSketch, SketchConfig};
pub use morris::{MorrisCounter, MorrisStep};
pub use rank::{
    base_b_rank, bucket_of, mix64, permutation_ranks, rank_of, rank_of_rep, weighted_rank,
    BaseBRank, Bucket, NodeId, PermRank, RankMode, SplitMix64, UnitRank, WeightedRank,
};
pub use sim::{
    cardinality_grid, default_estimators, run_simulation, SimConfig, SimEstimator, SimRow,
};
pub use weighted::{build_weighted_ads, hip_weighted, NodeWeights};
