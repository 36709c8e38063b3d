//! Streaming approximate distinct counters.
//!
//! The counters keep a MinHash sketch of the elements seen so far plus one
//! extra register holding a running estimate: whenever the sketch changes,
//! the new element's inverse inclusion probability is added to the count.
//! Queries then cost nothing. The k-partition base-2 variant uses the same
//! registers as a classic HyperLogLog counter, which is also provided as a
//! comparison baseline.

use crate::error::{Error, Result};
use crate::rank::{bucket_of, rank_of, NodeId, RankKey, RankMode};

fn ceil_log2(x: u32) -> u32 {
    if x <= 1 {
        0
    } else {
        32 - (x - 1).leading_zeros()
    }
}

/// Distinct counter over k-partition registers holding discretized rank
/// exponents, with a running inverse-probability count.
///
/// With the default base 2 and 5-bit registers the sketch state is exactly
/// a HyperLogLog register array; the count register makes estimation
/// constant-time and unbiased until registers saturate.
#[derive(Clone, Debug)]
pub struct HllHipCounter {
    k: usize,
    root: u32,
    cap: u32,
    regs: Vec<u32>,
    count: f64,
    seed: u64,
}

impl HllHipCounter {
    /// Base-2 counter with 5-bit registers (saturating at 31).
    pub fn new(k: usize, seed: u64) -> Result<HllHipCounter> {
        HllHipCounter::with_base_root(k, 1, seed)
    }

    /// Counter with base `b = 2^(1/root)`. Register width grows by
    /// `ceil(log2 root)` bits over the 5-bit base-2 layout.
    pub fn with_base_root(k: usize, root: u32, seed: u64) -> Result<HllHipCounter> {
        let width = 5 + ceil_log2(root);
        HllHipCounter::with_register_width(k, root, width, seed)
    }

    pub fn with_register_width(
        k: usize,
        root: u32,
        width: u32,
        seed: u64,
    ) -> Result<HllHipCounter> {
        if k == 0 || root == 0 {
            return Err(Error::InvalidParameter("need k >= 1 and root >= 1".into()));
        }
        if width == 0 || width > 31 {
            return Err(Error::InvalidParameter(format!(
                "bad register width {width}"
            )));
        }
        Ok(HllHipCounter {
            k,
            root,
            cap: (1u32 << width) - 1,
            regs: vec![0; k],
            count: 0.0,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn register_width(&self) -> u32 {
        32 - self.cap.leading_zeros()
    }

    pub fn registers(&self) -> &[u32] {
        &self.regs
    }

    /// Stored rank value of a register: `b^-M`, or 1 for an untouched one.
    #[inline]
    fn register_value(&self, m: u32) -> f64 {
        (-(m as f64) / self.root as f64).exp2()
    }

    /// Offer a stream element; duplicates never change state. When the
    /// element's discretized rank beats its bucket's register, the count
    /// grows by the inverse of the update probability
    /// `(1/k) sum_unsaturated b^-M[i]` before the register moves.
    pub fn offer(&mut self, item: NodeId) -> bool {
        let r = rank_of(item, self.seed).value();
        let h = crate::minhash::exponent_for_root(r, self.root).min(self.cap);
        let b = bucket_of(item, self.k, self.seed)
            .expect("k validated at construction")
            .zero_based();
        if h <= self.regs[b] {
            return false;
        }
        let mut tau_sum = 0.0f64;
        for &m in &self.regs {
            if m < self.cap {
                tau_sum += self.register_value(m);
            }
        }
        self.count += self.k as f64 / tau_sum;
        self.regs[b] = h;
        true
    }

    /// The running count; constant-time, no register scan.
    pub fn estimate(&self) -> f64 {
        self.count
    }

    /// All registers saturated: no update can occur and the estimate is
    /// frozen (and biased low from here on).
    pub fn saturated(&self) -> bool {
        self.regs.iter().all(|&m| m == self.cap)
    }

    /// Merge the MinHash component (per-register maximum). The count
    /// register is deliberately NOT merged: combining counts of overlapping
    /// streams needs an overlap estimate, so the merged count is reset and
    /// only register state carries over.
    pub fn merge_registers(&mut self, other: &HllHipCounter) -> Result<()> {
        if self.k != other.k
            || self.root != other.root
            || self.cap != other.cap
            || self.seed != other.seed
        {
            return Err(Error::InvalidParameter(
                "cannot merge counters with different k/base/width/seed".into(),
            ));
        }
        for (a, &b) in self.regs.iter_mut().zip(other.regs.iter()) {
            *a = (*a).max(b);
        }
        self.count = f64::NAN;
        Ok(())
    }
}

/// Classic HyperLogLog estimate from base-2 registers: the raw harmonic-mean
/// estimate and the conventionally corrected one (small-range linear
/// counting below 2.5k, large-range correction near the 32-bit hash space).
/// Kept solely as the comparison baseline.
pub fn hll_baseline_estimate(regs: &[u32]) -> (f64, f64) {
    let k = regs.len();
    let m = k as f64;
    let mut sum = 0.0f64;
    let mut zeros = 0usize;
    for &r in regs {
        sum += (-(r as f64)).exp2();
        if r == 0 {
            zeros += 1;
        }
    }
    let alpha = match k {
        0 => return (0.0, 0.0),
        _ if k >= 128 => 0.7213 / (1.0 + 1.079 / m),
        _ if k >= 64 => 0.709,
        _ if k >= 32 => 0.697,
        _ => 0.673,
    };
    let raw = alpha * m * m / sum;
    let two32 = 4_294_967_296.0f64;
    let corrected = if raw <= 2.5 * m && zeros > 0 {
        m * (m / zeros as f64).ln()
    } else if raw > two32 / 30.0 {
        -two32 * (1.0 - raw / two32).ln()
    } else {
        raw
    };
    (raw, corrected)
}

/// Distinct counter over a bottom-k sketch with full-precision or
/// discretized ranks. Each sketch change adds the inverse of the pre-update
/// k-th smallest rank (1 while the sketch is filling).
///
/// Element ids are kept alongside the stored ranks so duplicates are
/// recognized even when discretized ranks collide; the inclusion law still
/// compares discretized values alone, so the update probability (and with
/// it the estimator) is unchanged.
#[derive(Clone, Debug)]
pub struct BottomKHipCounter {
    k: usize,
    mode: RankMode,
    seed: u64,
    /// k smallest keys seen, ascending; `tie` holds the element id.
    entries: Vec<RankKey>,
    count: f64,
    updates: u64,
}

impl BottomKHipCounter {
    pub fn new(k: usize, seed: u64) -> Result<BottomKHipCounter> {
        BottomKHipCounter::with_mode(k, RankMode::Full, seed)
    }

    pub fn with_base_root(k: usize, root: u32, seed: u64) -> Result<BottomKHipCounter> {
        BottomKHipCounter::with_mode(k, RankMode::Pow2Root(root), seed)
    }

    fn with_mode(k: usize, mode: RankMode, seed: u64) -> Result<BottomKHipCounter> {
        if k == 0 {
            return Err(Error::InvalidParameter("need k >= 1".into()));
        }
        if let RankMode::Pow2Root(0) = mode {
            return Err(Error::InvalidParameter(
                "base exponent root must be >= 1".into(),
            ));
        }
        if mode == RankMode::Weighted {
            return Err(Error::Unsupported(
                "weighted distinct counting is not provided".into(),
            ));
        }
        Ok(BottomKHipCounter {
            k,
            mode,
            seed,
            entries: Vec::new(),
            count: 0.0,
            updates: 0,
        })
    }

    fn key(&self, item: NodeId) -> RankKey {
        let r = rank_of(item, self.seed);
        match self.mode {
            RankMode::Full => RankKey {
                value: r.value(),
                tie: item.0,
            },
            RankMode::Pow2Root(root) => {
                let h = crate::minhash::exponent_for_root(r.value(), root);
                RankKey {
                    value: crate::minhash::value_for_root(h, root),
                    tie: item.0,
                }
            }
            RankMode::Weighted => unreachable!(),
        }
    }

    /// Does a fresh element with this key enter, given the current k-th
    /// smallest? Full ranks break ties by id; discretized ranks compare
    /// values alone (a colliding value does not update).
    fn beats(&self, key: RankKey, tau: RankKey) -> bool {
        match self.mode {
            RankMode::Full => key < tau,
            RankMode::Pow2Root(_) => key.value < tau.value,
            RankMode::Weighted => unreachable!(),
        }
    }

    pub fn offer(&mut self, item: NodeId) -> bool {
        let key = self.key(item);
        if self.entries.iter().any(|e| e.tie == item.0) {
            return false;
        }
        if self.entries.len() < self.k {
            let at = self.entries.partition_point(|e| *e < key);
            self.entries.insert(at, key);
            self.count += 1.0;
            self.updates += 1;
            return true;
        }
        let tau = self.entries[self.k - 1];
        if self.beats(key, tau) {
            self.count += 1.0 / tau.value;
            let at = self.entries.partition_point(|e| *e < key);
            self.entries.insert(at, key);
            self.entries.pop();
            self.updates += 1;
            true
        } else {
            false
        }
    }

    pub fn estimate(&self) -> f64 {
        self.count
    }

    /// Number of sketch changes so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_element_adds_exactly_one() {
        let mut c = HllHipCounter::new(16, 7).unwrap();
        assert!(c.offer(NodeId(1)));
        assert_eq!(c.estimate(), 1.0);
        assert!(!c.offer(NodeId(1)));
        assert_eq!(c.estimate(), 1.0);
    }

    #[test]
    fn fresh_counter_reads_zero() {
        let c = HllHipCounter::new(8, 1).unwrap();
        assert_eq!(c.estimate(), 0.0);
        assert!(!c.saturated());
    }

    #[test]
    fn duplicate_insensitive_state() {
        let mut a = HllHipCounter::new(32, 3).unwrap();
        let mut b = HllHipCounter::new(32, 3).unwrap();
        // a sees a multiset, b sees distinct elements in first-occurrence order
        for i in [5u64, 7, 5, 9, 7, 7, 5, 11, 9] {
            a.offer(NodeId(i));
        }
        for i in [5u64, 7, 9, 11] {
            b.offer(NodeId(i));
        }
        assert_eq!(a.registers(), b.registers());
        assert_eq!(a.estimate(), b.estimate());
    }

    #[test]
    fn estimates_never_decrease() {
        let mut c = BottomKHipCounter::new(8, 5).unwrap();
        let mut prev = 0.0;
        for i in 0..3_000u64 {
            c.offer(NodeId(i % 700));
            assert!(c.estimate() >= prev);
            prev = c.estimate();
        }
    }

    #[test]
    fn bottomk_counter_ignores_duplicates_entirely() {
        // a multiset and its distinct set in first-occurrence order leave
        // identical state, full-precision and discretized
        for root in [0u32, 1] {
            let make = |seed| {
                if root == 0 {
                    BottomKHipCounter::new(4, seed).unwrap()
                } else {
                    BottomKHipCounter::with_base_root(4, root, seed).unwrap()
                }
            };
            let mut a = make(6);
            let mut b = make(6);
            for i in [3u64, 9, 3, 12, 9, 9, 3, 20, 12] {
                a.offer(NodeId(i));
            }
            for i in [3u64, 9, 12, 20] {
                b.offer(NodeId(i));
            }
            assert_eq!(a.estimate().to_bits(), b.estimate().to_bits());
            assert_eq!(a.updates(), b.updates());
        }
    }

    #[test]
    fn bottomk_exact_below_k() {
        let mut c = BottomKHipCounter::new(10, 2).unwrap();
        for i in 0..7u64 {
            c.offer(NodeId(i));
            c.offer(NodeId(i)); // duplicates ignored
        }
        assert_eq!(c.estimate(), 7.0);
        assert_eq!(c.updates(), 7);
    }

    #[test]
    fn base_root_one_is_bit_identical_to_base_two() {
        let mut a = HllHipCounter::new(16, 9).unwrap();
        let mut b = HllHipCounter::with_base_root(16, 1, 9).unwrap();
        for i in 0..5_000u64 {
            a.offer(NodeId(i));
            b.offer(NodeId(i));
        }
        assert_eq!(a.registers(), b.registers());
        assert_eq!(a.estimate().to_bits(), b.estimate().to_bits());
    }

    #[test]
    fn register_width_for_sqrt2() {
        let c = HllHipCounter::with_base_root(64, 2, 1).unwrap();
        assert_eq!(c.register_width(), 6);
        let d = HllHipCounter::new(64, 1).unwrap();
        assert_eq!(d.register_width(), 5);
    }

    #[test]
    fn baseline_empty_registers_correct_to_zero() {
        let (_, corrected) = hll_baseline_estimate(&[0u32; 16]);
        assert_eq!(corrected, 0.0);
    }

    #[test]
    fn hip_and_baseline_disagree_on_history() {
        // Same final register contents, different traces: the count register
        // remembers the trace, the baseline cannot.
        let k = 4usize;
        let seed = 1u64;
        let probe = |i: u64| {
            let r = rank_of(NodeId(i), seed).value();
            let h = crate::minhash::exponent_for_root(r, 1).min(31);
            let b = bucket_of(NodeId(i), k, seed).unwrap().zero_based();
            (b, h)
        };
        // two elements in one bucket with strictly increasing exponents
        let mut found = None;
        'outer: for i in 0..500u64 {
            for j in 0..500u64 {
                let (bi, hi) = probe(i);
                let (bj, hj) = probe(j);
                if i != j && bi == bj && hi < hj {
                    found = Some((i, j));
                    break 'outer;
                }
            }
        }
        let (lo, hi) = found.expect("hash space is dense enough");
        let mut one = HllHipCounter::new(k, seed).unwrap();
        one.offer(NodeId(hi));
        let mut two = HllHipCounter::new(k, seed).unwrap();
        two.offer(NodeId(lo));
        two.offer(NodeId(hi));
        assert_eq!(one.registers(), two.registers());
        assert_eq!(
            hll_baseline_estimate(one.registers()),
            hll_baseline_estimate(two.registers())
        );
        assert!((one.estimate() - two.estimate()).abs() > 1e-9);
    }

    #[test]
    fn register_merge_takes_maxima_and_invalidates_count() {
        let mut a = HllHipCounter::new(8, 4).unwrap();
        let mut b = HllHipCounter::new(8, 4).unwrap();
        let mut c = HllHipCounter::new(8, 4).unwrap();
        for i in 0..300u64 {
            a.offer(NodeId(i));
            c.offer(NodeId(i));
        }
        for i in 300..600u64 {
            b.offer(NodeId(i));
            c.offer(NodeId(i));
        }
        a.merge_registers(&b).unwrap();
        assert_eq!(a.registers(), c.registers());
        assert!(a.estimate().is_nan());
        let other = HllHipCounter::new(8, 5).unwrap();
        assert!(c.merge_registers(&other).is_err());
    }

    #[test]
    fn saturation_freezes_the_count() {
        let mut c = HllHipCounter::with_register_width(2, 1, 1, 11).unwrap();
        for i in 0..200u64 {
            c.offer(NodeId(i));
        }
        assert!(c.saturated());
        let frozen = c.estimate();
        for i in 200..400u64 {
            assert!(!c.offer(NodeId(i)));
        }
        assert_eq!(c.estimate(), frozen);
    }
}
