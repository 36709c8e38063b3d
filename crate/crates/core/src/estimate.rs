//! Inverse-probability estimation over all-distances sketches.
//!
//! Scanning a sketch by increasing distance, each entry's inclusion
//! probability conditioned on the ranks of all closer entries can be read
//! off the sketch itself: for bottom-k it is the running k-th smallest
//! rank, for k-mins one minus the product of per-permutation survival
//! probabilities, and for k-partition the average of per-bucket minima.
//! The inverse of that probability is the entry's adjusted weight, an
//! unbiased estimate of its unit presence, and sums of adjusted weights
//! estimate neighborhood cardinalities, distance-decay centralities, and
//! arbitrary nonnegative statistics of the distance relation. Discretized
//! ranks flow through the same scan: the stored threshold value is itself
//! the probability that a fresh discretized rank falls strictly below it.

use std::collections::BinaryHeap;

use crate::ads::{Ads, KthTracker};
use crate::error::{Error, Result};
use crate::minhash::Flavor;
use crate::rank::{NodeId, PermRank, RankMode};

/// Adjusted weight of one sketch entry.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct HipEntry {
    pub node: NodeId,
    pub distance: f64,
    /// Inclusion probability conditioned on closer entries, in (0, 1].
    pub tau: f64,
    /// Inverse-probability weight: unbiased unit-presence estimate.
    pub weight: f64,
}

/// Adjusted weights of every entry of one sketch, sorted by distance.
#[derive(Clone, Debug, PartialEq)]
pub struct HipWeights {
    owner: Option<NodeId>,
    entries: Vec<HipEntry>,
}

/// Compute adjusted weights from a sketch with hashed (full or discretized)
/// ranks. Weighted-rank sketches carry node weights and go through
/// [`crate::weighted::hip_weighted`].
///
/// For bottom-k sketches the neighborhood estimator built on these weights
/// has a coefficient of variation between `1/sqrt(2k)` and `1/sqrt(2(k-1))`
/// at cardinalities well past k, and no sketch-based estimator can beat the
/// lower end; discretized ranks inflate the variance by about `(1+b)/2`.
pub fn hip_weights(ads: &Ads) -> Result<HipWeights> {
    let cfg = ads.config();
    if cfg.mode == RankMode::Weighted {
        return Err(Error::Unsupported(
            "weighted sketches need node weights; use the weighted estimator".into(),
        ));
    }
    let entries = match cfg.flavor {
        Flavor::BottomK => {
            let mut tracker = KthTracker::new(cfg.k);
            let mut out = Vec::with_capacity(ads.entries().len());
            for e in ads.entries() {
                let tau = match tracker.kth() {
                    None => 1.0,
                    Some(kth) => kth.value,
                };
                out.push(HipEntry {
                    node: e.node,
                    distance: e.distance,
                    tau,
                    weight: 1.0 / tau,
                });
                tracker.push(cfg.key_from_payload(e.rank_bits, e.node));
            }
            out
        }
        Flavor::KMins => {
            let mut mins = vec![1.0f64; cfg.k];
            let merged = ads.merged();
            let mut out: Vec<HipEntry> = Vec::new();
            let mut i = 0;
            while i < merged.len() {
                let node = merged[i].1.node;
                let distance = merged[i].1.distance;
                let mut survive = 1.0f64;
                for m in &mins {
                    survive *= 1.0 - m;
                }
                let tau = 1.0 - survive;
                out.push(HipEntry {
                    node,
                    distance,
                    tau,
                    weight: 1.0 / tau,
                });
                while i < merged.len() && merged[i].1.node == node {
                    let (comp, e) = merged[i];
                    let v = cfg.key_from_payload(e.rank_bits, e.node).value;
                    if v < mins[comp] {
                        mins[comp] = v;
                    }
                    i += 1;
                }
            }
            out
        }
        Flavor::KPartition => {
            let mut mins = vec![1.0f64; cfg.k];
            let mut sum: f64 = cfg.k as f64; // running sum of bucket minima
            let mut out = Vec::with_capacity(ads.entries().len());
            for e in ads.entries() {
                let tau = sum / cfg.k as f64;
                out.push(HipEntry {
                    node: e.node,
                    distance: e.distance,
                    tau,
                    weight: 1.0 / tau,
                });
                let b = cfg.bucket_index(e.node);
                let v = cfg.key_from_payload(e.rank_bits, e.node).value;
                if v < mins[b] {
                    sum -= mins[b] - v;
                    mins[b] = v;
                }
            }
            out
        }
    };
    Ok(HipWeights {
        owner: ads.owner(),
        entries,
    })
}

impl HipWeights {
    pub(crate) fn from_entries(owner: Option<NodeId>, entries: Vec<HipEntry>) -> HipWeights {
        HipWeights { owner, entries }
    }

    pub fn owner(&self) -> Option<NodeId> {
        self.owner
    }

    pub fn entries(&self) -> &[HipEntry] {
        &self.entries
    }

    /// Iterate groups of entries sharing a distance. Summing per group keeps
    /// distance-only queries bit-identical between the raw and compressed
    /// representations.
    fn distance_groups(&self) -> impl Iterator<Item = (f64, &[HipEntry])> {
        DistanceGroups {
            entries: &self.entries,
            at: 0,
        }
    }

    /// Estimated number of nodes within distance `d` (weight within `d` for
    /// weighted sketches): the sum of adjusted weights of entries at
    /// distance at most `d`.
    pub fn neighborhood(&self, d: f64) -> f64 {
        let mut total = 0.0;
        for (dist, group) in self.distance_groups() {
            if dist > d {
                break;
            }
            let mut gsum = 0.0;
            for e in group {
                gsum += e.weight;
            }
            total += gsum;
        }
        total
    }

    /// Unbiased estimate of `sum_j g(j, d_j)` over all reachable nodes.
    pub fn qg(&self, g: impl Fn(NodeId, f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for e in &self.entries {
            let v = g(e.node, e.distance);
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "g({}, {}) = {v}; node functions must be nonnegative",
                    e.node, e.distance
                )));
            }
            total += e.weight * v;
        }
        Ok(total)
    }

    /// Distance-decay centrality estimate `sum_j a_j alpha(d_j) beta(j)`.
    pub fn centrality(&self, alpha: &Kernel, beta: impl Fn(NodeId) -> f64) -> Result<f64> {
        alpha.validate()?;
        let mut total = 0.0;
        for (dist, group) in self.distance_groups() {
            let a = alpha.eval(dist);
            let mut gsum = 0.0;
            for e in group {
                let b = beta(e.node);
                if !(b >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "beta({}) = {b}; node filters must be nonnegative",
                        e.node
                    )));
                }
                gsum += e.weight * b;
            }
            total += a * gsum;
        }
        Ok(total)
    }

    /// Collapse to (distance, summed weight) pairs; all distance-only
    /// queries evaluate identically on the compressed form.
    pub fn compress(&self) -> DistanceWeights {
        let mut pairs = Vec::new();
        for (dist, group) in self.distance_groups() {
            let mut gsum = 0.0;
            for e in group {
                gsum += e.weight;
            }
            pairs.push((dist, gsum));
        }
        DistanceWeights { pairs }
    }
}

struct DistanceGroups<'a> {
    entries: &'a [HipEntry],
    at: usize,
}

impl<'a> Iterator for DistanceGroups<'a> {
    type Item = (f64, &'a [HipEntry]);

    fn next(&mut self) -> Option<Self::Item> {
        if self.at >= self.entries.len() {
            return None;
        }
        let start = self.at;
        let d = self.entries[start].distance;
        while self.at < self.entries.len() && self.entries[self.at].distance == d {
            self.at += 1;
        }
        Some((d, &self.entries[start..self.at]))
    }
}

/// Compressed distance/weight form of a sketch's adjusted weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceWeights {
    pairs: Vec<(f64, f64)>,
}

impl DistanceWeights {
    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn neighborhood(&self, d: f64) -> f64 {
        let mut total = 0.0;
        for &(dist, w) in &self.pairs {
            if dist > d {
                break;
            }
            total += w;
        }
        total
    }

    pub fn kernel_sum(&self, alpha: &Kernel) -> Result<f64> {
        alpha.validate()?;
        let mut total = 0.0;
        for &(dist, w) in &self.pairs {
            total += alpha.eval(dist) * w;
        }
        Ok(total)
    }
}

/// Named non-increasing distance kernels.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Kernel {
    /// 1 within the distance bound, 0 beyond.
    Threshold(f64),
    /// `exp(-lambda x)`.
    Exponential(f64),
    /// `1/x`, with the conventional 0 at distance 0 (a node is not counted
    /// toward its own harmonic centrality).
    Harmonic,
    /// Constant 1: reachable-set size.
    Reachability,
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Threshold(d) if !(d >= 0.0) || !d.is_finite() => Err(Error::InvalidParameter(
                format!("threshold distance must be nonnegative, got {d}"),
            )),
            // a negative decay rate would make the kernel increasing
            Kernel::Exponential(l) if !(l >= 0.0) || !l.is_finite() => {
                Err(Error::InvalidParameter(format!(
                    "exponential decay rate must be nonnegative, got {l}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Kernel::Threshold(d) => {
                if x <= d {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Exponential(l) => (-l * x).exp(),
            Kernel::Harmonic => {
                if x > 0.0 {
                    1.0 / x
                } else {
                    0.0
                }
            }
            Kernel::Reachability => 1.0,
        }
    }
}

/// Streaming cardinality estimator over permutation ranks `1..=n`.
///
/// The first k distinct ranks are counted exactly. Afterwards each sketch
/// update adds `(n - s + 1)/(mu - k + 1)` where `mu` is the k-th smallest
/// stored rank before the update: the expected number of distinct elements
/// consumed per update when sampling without replacement. Once the sketch
/// holds exactly the ranks `1..=k` no further update can occur, and the
/// reported value is corrected to `s (k+1)/k - 1` for the unseen tail.
#[derive(Clone, Debug)]
pub struct PermutationEstimator {
    n: u64,
    k: usize,
    sketch: BinaryHeap<u64>,
    s_hat: f64,
}

impl PermutationEstimator {
    pub fn new(n: u64, k: usize) -> Result<PermutationEstimator> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("need n >= 1 and k >= 1".into()));
        }
        Ok(PermutationEstimator {
            n,
            k,
            sketch: BinaryHeap::with_capacity(k + 1),
            s_hat: 0.0,
        })
    }

    /// Offer the permutation rank of the next element; returns whether the
    /// sketch changed.
    pub fn offer(&mut self, rank: PermRank) -> Result<bool> {
        let r = rank.0;
        if r < 1 || r > self.n {
            return Err(Error::InvalidInput(format!(
                "permutation rank {r} outside 1..={}",
                self.n
            )));
        }
        if self.sketch.len() < self.k {
            if self.sketch.iter().any(|&x| x == r) {
                return Err(Error::InvalidInput(format!(
                    "permutation rank {r} repeated"
                )));
            }
            self.sketch.push(r);
            self.s_hat += 1.0;
            return Ok(true);
        }
        let mu = *self.sketch.peek().expect("sketch is full");
        if r >= mu {
            return Ok(false);
        }
        if self.sketch.iter().any(|&x| x == r) {
            return Err(Error::InvalidInput(format!(
                "permutation rank {r} repeated"
            )));
        }
        let w = (self.n as f64 - self.s_hat + 1.0) / (mu as f64 - self.k as f64 + 1.0);
        self.s_hat += w;
        self.sketch.pop();
        self.sketch.push(r);
        Ok(true)
    }

    /// Current cardinality estimate, with the saturation correction applied
    /// to the reported value only.
    pub fn estimate(&self) -> f64 {
        if self.sketch.len() == self.k && self.sketch.peek() == Some(&(self.k as u64)) {
            self.s_hat * (self.k as f64 + 1.0) / self.k as f64 - 1.0
        } else {
            self.s_hat
        }
    }
}

/// The unique unbiased cardinality estimate based only on the number of
/// sketch entries: `s` for `s <= k`, otherwise `k (1 + 1/k)^(s-k+1) - 1`.
pub fn size_estimate(s: u64, k: usize) -> f64 {
    let kf = k as f64;
    if s <= k as u64 {
        s as f64
    } else {
        kf * (1.0 + 1.0 / kf).powi((s - k as u64 + 1) as i32) - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ads::stream_ads_first;
    use crate::minhash::SketchConfig;

    fn hip_of_stream(flavor: Flavor, k: usize, seed: u64, n: u64) -> HipWeights {
        let cfg = SketchConfig::new(flavor, k, RankMode::Full, seed).unwrap();
        let ads = stream_ads_first(&cfg, (0..n).map(|i| (NodeId(i), i as f64))).unwrap();
        hip_weights(&ads).unwrap()
    }

    #[test]
    fn first_k_bottomk_weights_are_one() {
        let hw = hip_of_stream(Flavor::BottomK, 5, 3, 100);
        for e in hw.entries().iter().take(5) {
            assert_eq!(e.tau, 1.0);
            assert_eq!(e.weight, 1.0);
        }
        // weights never decrease with distance for bottom-k
        for pair in hw.entries().windows(2) {
            assert!(pair[1].weight >= pair[0].weight);
        }
    }

    #[test]
    fn bottom1_weight_is_inverse_running_min() {
        let hw = hip_of_stream(Flavor::BottomK, 1, 8, 200);
        let cfg = SketchConfig::new(Flavor::BottomK, 1, RankMode::Full, 8).unwrap();
        let mut min_so_far: Option<f64> = None;
        let ads = stream_ads_first(&cfg, (0..200u64).map(|i| (NodeId(i), i as f64))).unwrap();
        for (e, h) in ads.entries().iter().zip(hw.entries()) {
            match min_so_far {
                None => assert_eq!(h.weight, 1.0),
                Some(m) => assert_eq!(h.weight, 1.0 / m),
            }
            let v = cfg.key_from_payload(e.rank_bits, e.node).value;
            min_so_far = Some(min_so_far.map_or(v, |m: f64| m.min(v)));
        }
    }

    #[test]
    fn neighborhood_sums_adjusted_weights() {
        for flavor in [Flavor::BottomK, Flavor::KMins, Flavor::KPartition] {
            let hw = hip_of_stream(flavor, 4, 5, 50);
            let all: f64 = hw.entries().iter().map(|e| e.weight).sum();
            assert!((hw.neighborhood(f64::INFINITY) - all).abs() < 1e-9);
            assert!(hw.entries().iter().all(|e| e.tau > 0.0 && e.tau <= 1.0));
        }
    }

    #[test]
    fn neighborhood_is_exact_while_it_fits_in_k() {
        // fewer than k elements within d: every weight is 1, so the
        // estimate is the exact count
        let hw = hip_of_stream(Flavor::BottomK, 8, 11, 100);
        for d in 0..8u64 {
            assert_eq!(hw.neighborhood(d as f64), (d + 1) as f64);
        }
    }

    #[test]
    fn qg_reduces_to_neighborhood_for_constant_g() {
        let hw = hip_of_stream(Flavor::BottomK, 4, 5, 60);
        let a = hw.qg(|_, _| 1.0).unwrap();
        let b = hw.neighborhood(f64::INFINITY);
        assert!((a - b).abs() < 1e-12);
        assert!(hw.qg(|_, _| -1.0).is_err());
    }

    #[test]
    fn threshold_centrality_equals_neighborhood_bitwise() {
        let hw = hip_of_stream(Flavor::BottomK, 4, 5, 60);
        for d in [0.0, 3.0, 17.0, 59.0] {
            let a = hw.centrality(&Kernel::Threshold(d), |_| 1.0).unwrap();
            let b = hw.neighborhood(d);
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn compression_is_lossless_for_distance_queries() {
        // force duplicate distances
        let cfg = SketchConfig::new(Flavor::BottomK, 6, RankMode::Full, 2).unwrap();
        let ads = stream_ads_first(&cfg, (0..80u64).map(|i| (NodeId(i), (i / 4) as f64))).unwrap();
        let hw = hip_weights(&ads).unwrap();
        let dw = hw.compress();
        assert!(dw.pairs().len() < hw.entries().len());
        for d in [0.0, 1.0, 5.0, 19.0] {
            assert_eq!(hw.neighborhood(d).to_bits(), dw.neighborhood(d).to_bits());
        }
        let a = hw.centrality(&Kernel::Threshold(7.0), |_| 1.0).unwrap();
        let b = dw.kernel_sum(&Kernel::Threshold(7.0)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        // unique distances: compression is the identity on weights
        let hw2 = hip_of_stream(Flavor::BottomK, 4, 5, 40);
        let dw2 = hw2.compress();
        assert_eq!(dw2.pairs().len(), hw2.entries().len());
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel::Exponential(-0.5).validate().is_err());
        assert!(Kernel::Threshold(-1.0).validate().is_err());
        assert!(Kernel::Harmonic.validate().is_ok());
        assert_eq!(Kernel::Harmonic.eval(0.0), 0.0);
        assert_eq!(Kernel::Reachability.eval(123.0), 1.0);
    }

    #[test]
    fn permutation_estimator_exact_below_k() {
        let mut est = PermutationEstimator::new(100, 10).unwrap();
        for r in [17u64, 3, 99, 54, 21] {
            est.offer(PermRank(r)).unwrap();
        }
        assert_eq!(est.estimate(), 5.0);
        assert!(est.offer(PermRank(0)).is_err());
        assert!(est.offer(PermRank(101)).is_err());
    }

    #[test]
    fn permutation_estimator_exhaustive_two_elements() {
        // k = 1, n = 2: both orders of the two permutation ranks average to 2.
        let mut total = 0.0;
        for order in [[1u64, 2], [2, 1]] {
            let mut est = PermutationEstimator::new(2, 1).unwrap();
            for r in order {
                est.offer(PermRank(r)).unwrap();
            }
            total += est.estimate();
        }
        assert_eq!(total / 2.0, 2.0);
    }

    #[test]
    fn size_estimate_spot_values() {
        assert_eq!(size_estimate(4, 4), 4.0);
        assert_eq!(size_estimate(3, 4), 3.0);
        let k = 4.0f64;
        let want = (k + 1.0) * (k + 1.0) / k - 1.0;
        assert!((size_estimate(5, 4) - want).abs() < 1e-12);
        // k = 1 follows the same closed form, 2^s - 1
        assert_eq!(size_estimate(3, 1), 7.0);
    }
}
