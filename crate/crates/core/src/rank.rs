//! Seedable assignment of ranks, buckets, and permutations to node identifiers.
//!
//! Every sketch in this crate is coordinated through this module: for a fixed
//! seed, a node receives the identical rank no matter which structure asks,
//! so sketches of different sets can be combined and compared.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Identifier of a node or stream element.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const BUCKET_SALT: u64 = 0x5851_F42D_4C95_7F2D;

/// 64-bit avalanche mixer (splitmix64 finalizer).
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Minimal deterministic generator used for probabilistic counter steps and
/// for driving simulations.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `0..n`.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        // Modulo bias is below 2^-32 for every n used here.
        self.next_u64() % n
    }
}

/// A uniform rank in `(0, 1)`.
///
/// The full 64 hash bits are retained so that two nodes collide with
/// probability at most `n^2 / 2^64`; `value()` exposes the rank with 53 bits
/// of uniform precision and is never exactly 0 or 1, so logarithms of ranks
/// are always finite.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitRank {
    bits: u64,
}

impl UnitRank {
    pub fn from_bits(bits: u64) -> Self {
        // The all-zero hash output maps to the smallest positive value.
        UnitRank { bits: bits.max(1) }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    /// The rank as a floating point number in `(0, 1)`.
    #[inline]
    pub fn value(self) -> f64 {
        ((self.bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Deterministic uniform rank of `node` under `seed`.
#[inline]
pub fn rank_of(node: NodeId, seed: u64) -> UnitRank {
    UnitRank::from_bits(mix64(node.0.wrapping_mul(GOLDEN).wrapping_add(mix64(seed))))
}

/// Rank of `node` in the `rep`-th independent permutation derived from
/// `seed`; repetition 0 is not the same permutation as [`rank_of`].
#[inline]
pub fn rank_of_rep(node: NodeId, rep: u32, seed: u64) -> UnitRank {
    let derived = mix64(seed).wrapping_add((rep as u64 + 1).wrapping_mul(GOLDEN));
    UnitRank::from_bits(mix64(
        node.0.wrapping_mul(GOLDEN).wrapping_add(mix64(derived)),
    ))
}

/// A rank rounded down to an integral power `b^-h` of a base `b > 1`,
/// stored as the exponent `h`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BaseBRank {
    pub exponent: u32,
}

impl BaseBRank {
    /// The rounded rank value `b^-exponent`.
    pub fn value(self, b: f64) -> f64 {
        b.powi(-(self.exponent as i32))
    }
}

/// Round `r` down to the nearest power of `b`: `exponent = ceil(-log_b r)`.
pub fn base_b_rank(r: UnitRank, b: f64) -> Result<BaseBRank> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base must exceed 1, got {b}"
        )));
    }
    Ok(BaseBRank {
        exponent: discretize_exponent(r.value(), b),
    })
}

/// `ceil(-log_b v)` for `v` in `(0, 1)`.
#[inline]
pub(crate) fn discretize_exponent(v: f64, b: f64) -> u32 {
    let e = (-v.log2() / b.log2()).ceil();
    // v < 1 makes the logarithm positive; clamp guards rounding dust at v -> 1.
    if e < 1.0 {
        1
    } else {
        e as u32
    }
}

/// Partition bucket, indexed `1..=k`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bucket(pub u32);

impl Bucket {
    pub fn zero_based(self) -> usize {
        self.0 as usize - 1
    }
}

/// Uniform deterministic bucket of `node` among `k` buckets.
///
/// The bucket stream is independent of the rank stream for the same seed.
pub fn bucket_of(node: NodeId, k: usize, seed: u64) -> Result<Bucket> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "bucket count k must be at least 1".into(),
        ));
    }
    let h = mix64(
        node.0
            .wrapping_mul(GOLDEN)
            .wrapping_add(mix64(seed ^ BUCKET_SALT)),
    );
    Ok(Bucket((h % k as u64) as u32 + 1))
}

/// Rank drawn from an exponential distribution with rate `beta`.
#[derive(Copy, Clone, Debug, PartialEq, PartialOrd)]
pub struct WeightedRank {
    pub value: f64,
}

/// `-ln(1 - r) / beta` for the node's uniform rank `r`; exponentially
/// distributed with parameter `beta` and monotone in `r`.
pub fn weighted_rank(node: NodeId, beta: f64, seed: u64) -> Result<WeightedRank> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "node weight must be positive and finite, got {beta}"
        )));
    }
    let r = rank_of(node, seed).value();
    Ok(WeightedRank {
        value: -(-r).ln_1p() / beta,
    })
}

/// Position in a random permutation of the session's nodes, `1..=n`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PermRank(pub u64);

/// Assign each node a distinct position in `1..=n`, ordered consistently
/// with [`rank_of`] (ties broken by id).
pub fn permutation_ranks(nodes: &[NodeId], seed: u64) -> Result<HashMap<NodeId, PermRank>> {
    let mut order: Vec<NodeId> = nodes.to_vec();
    order.sort_unstable();
    if order.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput(
            "duplicate node id in permutation domain".into(),
        ));
    }
    order.sort_by(|a, b| {
        rank_of(*a, seed)
            .value()
            .total_cmp(&rank_of(*b, seed).value())
            .then(a.cmp(b))
    });
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(i, node)| (node, PermRank(i as u64 + 1)))
        .collect())
}

/// Rank regimes a sketch can be built under.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RankMode {
    /// Full-precision uniform ranks.
    Full,
    /// Ranks rounded down to powers of `b = 2^(1/i)`; stores exponents.
    Pow2Root(u32),
    /// Exponentially distributed ranks driven by per-node weights.
    Weighted,
}

impl RankMode {
    /// The numeric base for discretized modes.
    pub fn base(self) -> Option<f64> {
        match self {
            RankMode::Full | RankMode::Weighted => None,
            RankMode::Pow2Root(i) => Some(2f64.powf(1.0 / i as f64)),
        }
    }
}

/// Total order on ranks used by every sketch construction.
///
/// Full and weighted ranks carry the node id as a tiebreak, making all
/// constructions deterministic. Discretized ranks compare by value alone
/// (ties are real and carry multiplicity), so `tie` is fixed to 0 there.
#[derive(Copy, Clone, Debug, PartialEq)]
pub(crate) struct RankKey {
    pub value: f64,
    pub tie: u64,
}

impl Eq for RankKey {}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.tie.cmp(&other.tie))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
