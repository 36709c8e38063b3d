//! All-distances sketches: per-node samples of the distance relation.
//!
//! An entry `(rank, node, distance)` belongs to a bottom-k sketch exactly
//! when its rank is below the k-th smallest rank among strictly closer
//! entries; k-mins keeps k independent bottom-1 components and k-partition
//! keeps a bottom-1 per bucket. Distance ties are broken by node id
//! everywhere, so construction is deterministic given a seed.

use crate::error::{Error, Result};
use crate::graph::Direction;
use crate::minhash::{Flavor, SketchConfig};
use crate::rank::{NodeId, RankKey, RankMode};

/// One sketch entry. `rank_bits` is the rank payload under the sketch's
/// rank regime: full hash bits, a discretization exponent, or the bits of
/// a weighted rank value.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AdsEntry {
    pub node: NodeId,
    pub rank_bits: u64,
    pub distance: f64,
}

/// Strict lexicographic "closer" test on (distance, node).
#[inline]
pub(crate) fn lex_before(da: f64, na: NodeId, db: f64, nb: NodeId) -> bool {
    match da.total_cmp(&db) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Equal => na < nb,
        std::cmp::Ordering::Greater => false,
    }
}

/// Running "k-th smallest rank" tracker: a max-heap of the k smallest keys
/// pushed so far. `kth()` is `None` while fewer than k keys were seen
/// (the threshold is then the supremum of the rank domain).
pub(crate) struct KthTracker {
    k: usize,
    heap: std::collections::BinaryHeap<RankKey>,
}

impl KthTracker {
    pub(crate) fn new(k: usize) -> KthTracker {
        KthTracker {
            k,
            heap: std::collections::BinaryHeap::with_capacity(k + 1),
        }
    }

    pub(crate) fn push(&mut self, key: RankKey) {
        if self.heap.len() < self.k {
            self.heap.push(key);
        } else if let Some(top) = self.heap.peek() {
            if key < *top {
                self.heap.push(key);
                self.heap.pop();
            }
        }
    }

    pub(crate) fn kth(&self) -> Option<RankKey> {
        if self.heap.len() < self.k {
            None
        } else {
            self.heap.peek().copied()
        }
    }
}

/// The all-distances sketch of one node (or of a stream).
#[derive(Clone, Debug, PartialEq)]
pub struct Ads {
    cfg: SketchConfig,
    owner: Option<NodeId>,
    comps: Vec<Vec<AdsEntry>>,
}

impl Ads {
    /// Empty sketch for a graph node; builders insert the owner at distance 0.
    pub(crate) fn new_graph(cfg: SketchConfig, owner: NodeId) -> Ads {
        Ads {
            cfg,
            owner: Some(owner),
            comps: vec![Vec::new(); cfg.comp_count()],
        }
    }

    /// Empty sketch over a stream (no owner).
    pub fn new_stream(cfg: SketchConfig) -> Result<Ads> {
        cfg.validate()?;
        if cfg.mode == RankMode::Weighted {
            return Err(Error::Unsupported(
                "stream sketches use hashed ranks".into(),
            ));
        }
        Ok(Ads {
            cfg,
            owner: None,
            comps: vec![Vec::new(); cfg.comp_count()],
        })
    }

    pub(crate) fn from_raw(
        cfg: SketchConfig,
        owner: Option<NodeId>,
        comps: Vec<Vec<AdsEntry>>,
    ) -> Ads {
        Ads { cfg, owner, comps }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.cfg
    }

    pub fn owner(&self) -> Option<NodeId> {
        self.owner
    }

    /// Entry list of one component, sorted by (distance, node). Bottom-k and
    /// k-partition sketches have a single component; k-mins has k.
    pub fn component(&self, comp: usize) -> &[AdsEntry] {
        &self.comps[comp]
    }

    pub fn component_count(&self) -> usize {
        self.comps.len()
    }

    /// Entries of single-component flavors.
    pub fn entries(&self) -> &[AdsEntry] {
        debug_assert_eq!(self.comps.len(), 1);
        &self.comps[0]
    }

    /// Total stored entries across components.
    pub fn size(&self) -> usize {
        self.comps.iter().map(|c| c.len()).sum()
    }

    /// All `(component, entry)` pairs merged in (distance, node, component)
    /// order; a node may appear once per component in a k-mins sketch.
    pub(crate) fn merged(&self) -> Vec<(usize, &AdsEntry)> {
        let mut all: Vec<(usize, &AdsEntry)> = self
            .comps
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| c.iter().map(move |e| (ci, e)))
            .collect();
        all.sort_by(|a, b| {
            a.1.distance
                .total_cmp(&b.1.distance)
                .then(a.1.node.cmp(&b.1.node))
                .then(a.0.cmp(&b.0))
        });
        all
    }

    pub(crate) fn contains(&self, comp: usize, node: NodeId) -> Option<f64> {
        self.comps[comp]
            .iter()
            .find(|e| e.node == node)
            .map(|e| e.distance)
    }

    pub(crate) fn remove(&mut self, comp: usize, node: NodeId) {
        self.comps[comp].retain(|e| e.node != node);
    }

    /// K-th smallest rank among entries strictly closer than `(d, node)`
    /// with the radius inflated by `(1+eps)`; `None` when fewer than the
    /// component's k entries qualify. For k-partition only same-bucket
    /// entries count.
    pub(crate) fn law_threshold(
        &self,
        comp: usize,
        node: NodeId,
        d: f64,
        eps: f64,
    ) -> Option<RankKey> {
        let radius = if eps == 0.0 { d } else { d * (1.0 + eps) };
        let bucket = match self.cfg.flavor {
            Flavor::KPartition => Some(self.cfg.bucket_index(node)),
            _ => None,
        };
        let mut tracker = KthTracker::new(self.cfg.comp_k());
        for e in &self.comps[comp] {
            if !lex_before(e.distance, e.node, radius, node) {
                break;
            }
            if e.node == node {
                continue;
            }
            if let Some(b) = bucket {
                if self.cfg.bucket_index(e.node) != b {
                    continue;
                }
            }
            tracker.push(self.cfg.key_from_payload(e.rank_bits, e.node));
        }
        tracker.kth()
    }

    /// Count of entries strictly closer than `(d, node)`, bucket-restricted
    /// for k-partition. Used by rank-ordered construction, where the count
    /// test is equivalent to the rank test.
    pub(crate) fn count_closer(&self, comp: usize, node: NodeId, d: f64) -> usize {
        match self.cfg.flavor {
            Flavor::KPartition => {
                let b = self.cfg.bucket_index(node);
                let mut count = 0;
                for e in &self.comps[comp] {
                    if !lex_before(e.distance, e.node, d, node) {
                        break;
                    }
                    if self.cfg.bucket_index(e.node) == b {
                        count += 1;
                        if count >= self.cfg.comp_k() {
                            break;
                        }
                    }
                }
                count
            }
            _ => self.comps[comp].partition_point(|e| lex_before(e.distance, e.node, d, node)),
        }
    }

    pub(crate) fn push_sorted(&mut self, comp: usize, node: NodeId, rank_bits: u64, distance: f64) {
        let at =
            self.comps[comp].partition_point(|e| lex_before(e.distance, e.node, distance, node));
        self.comps[comp].insert(
            at,
            AdsEntry {
                node,
                rank_bits,
                distance,
            },
        );
    }

    /// The membership-law insert: inserts iff `node` is absent from the
    /// component and its rank is below the k-th smallest rank among entries
    /// at least as close (radius inflated by `(1+eps)`). Returns whether the
    /// entry was inserted.
    pub(crate) fn insert_keyed(
        &mut self,
        comp: usize,
        node: NodeId,
        payload: u64,
        key: RankKey,
        distance: f64,
        eps: f64,
    ) -> bool {
        if self.contains(comp, node).is_some() {
            return false;
        }
        if let Some(kth) = self.law_threshold(comp, node, distance, eps) {
            if !(key < kth) {
                return false;
            }
        }
        self.push_sorted(comp, node, payload, distance);
        true
    }

    /// Insert an element at the given distance under the sketch's hashed
    /// rank regime. Correct when elements arrive in non-decreasing distance
    /// order (ties in distance are re-checked internally).
    pub fn insert(&mut self, node: NodeId, distance: f64) -> Result<bool> {
        if !(distance >= 0.0) || !distance.is_finite() {
            return Err(Error::InvalidInput(format!("bad distance {distance}")));
        }
        if self.cfg.mode == RankMode::Weighted {
            return Err(Error::Unsupported(
                "weighted sketches are built through the weighted builder".into(),
            ));
        }
        let mut changed = false;
        for comp in 0..self.cfg.comp_count() {
            let (payload, key) = self.cfg.hash_key(comp, node);
            if self.insert_keyed(comp, node, payload, key, distance, 0.0) {
                changed = true;
                // An equal-distance earlier arrival with a larger id may now
                // be dominated; re-enforce the law over the tied range.
                if self.comps[comp]
                    .iter()
                    .any(|e| e.distance == distance && e.node != node)
                {
                    self.cleanup(comp);
                }
            }
        }
        Ok(changed)
    }

    /// Re-enforce the membership law over a component, dropping entries
    /// dominated by strictly closer ones. A single forward pass suffices:
    /// thresholds depend only on retained strictly-closer entries.
    ///
    /// Removal deliberately never uses a radius slack, even in approximate
    /// construction: a removal justified by strictly closer witnesses keeps
    /// those witnesses inside the ball of every entry excluded earlier,
    /// which is what the relaxed exclusion guarantee rests on.
    pub(crate) fn cleanup(&mut self, comp: usize) {
        let k = self.cfg.comp_k();
        let is_partition = self.cfg.flavor == Flavor::KPartition;
        let buckets = if is_partition { self.cfg.k } else { 1 };
        let mut trackers: Vec<KthTracker> = (0..buckets).map(|_| KthTracker::new(k)).collect();
        let mut retained: Vec<AdsEntry> = Vec::with_capacity(self.comps[comp].len());
        for e in &self.comps[comp] {
            let b = if is_partition {
                self.cfg.bucket_index(e.node)
            } else {
                0
            };
            let key = self.cfg.key_from_payload(e.rank_bits, e.node);
            let keep = match trackers[b].kth() {
                None => true,
                Some(kth) => key < kth,
            };
            if keep {
                trackers[b].push(key);
                retained.push(*e);
            }
        }
        self.comps[comp] = retained;
    }
}

/// Sketches of equal configuration for every node of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct AdsSet {
    cfg: SketchConfig,
    direction: Direction,
    ads: Vec<Ads>,
}

impl AdsSet {
    pub(crate) fn from_parts(cfg: SketchConfig, direction: Direction, ads: Vec<Ads>) -> AdsSet {
        AdsSet {
            cfg,
            direction,
            ads,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.cfg
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    pub fn node(&self, v: NodeId) -> Result<&Ads> {
        self.ads
            .get(v.0 as usize)
            .ok_or_else(|| Error::InvalidInput(format!("node {v} not in sketch set")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ads> {
        self.ads.iter()
    }

    pub fn mean_size(&self) -> f64 {
        if self.ads.is_empty() {
            return 0.0;
        }
        self.ads.iter().map(|a| a.size()).sum::<usize>() as f64 / self.ads.len() as f64
    }
}

/// Sketch of a stream keyed by first-occurrence time: an element enters if
/// its rank was below the running k-th smallest at its first occurrence,
/// with that time as its distance.
pub fn stream_ads_first(
    cfg: &SketchConfig,
    items: impl IntoIterator<Item = (NodeId, f64)>,
) -> Result<Ads> {
    let mut ads = Ads::new_stream(*cfg)?;
    let mut last = f64::NEG_INFINITY;
    for (node, t) in items {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("bad timestamp {t}")));
        }
        if t < last {
            return Err(Error::InvalidInput(format!(
                "timestamps must be non-decreasing ({t} after {last})"
            )));
        }
        last = t;
        ads.insert(node, t)?;
    }
    Ok(ads)
}

/// Sketch of a stream keyed by most-recent occurrence: each element's
/// distance is `horizon - t` for its latest occurrence time `t`.
pub fn stream_ads_recent(
    cfg: &SketchConfig,
    items: impl IntoIterator<Item = (NodeId, f64)>,
    horizon: f64,
) -> Result<Ads> {
    let mut ads = Ads::new_stream(*cfg)?;
    let mut last = f64::NEG_INFINITY;
    for (node, t) in items {
        if !t.is_finite() || t >= horizon {
            return Err(Error::InvalidInput(format!(
                "timestamp {t} not below horizon {horizon}"
            )));
        }
        if t < last {
            return Err(Error::InvalidInput(format!(
                "timestamps must be non-decreasing ({t} after {last})"
            )));
        }
        last = t;
        let distance = horizon - t;
        for comp in 0..ads.cfg.comp_count() {
            ads.remove(comp, node);
            let (payload, key) = ads.cfg.hash_key(comp, node);
            if ads.insert_keyed(comp, node, payload, key, distance, 0.0) {
                ads.cleanup(comp);
            }
        }
    }
    Ok(ads)
}

/// The n-th harmonic number.
pub fn harmonic_number(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n <= 10_000_000 {
        (1..=n).map(|i| 1.0 / i as f64).sum()
    } else {
        let x = n as f64;
        x.ln() + 0.577_215_664_901_532_9 + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
    }
}

/// Expected number of stored entries in a sketch of `n` elements:
/// `k + k(H_n - H_k)` for bottom-k, `k H_{n/k}` for k-partition, and
/// `k H_n` for k-mins (k bottom-1 components).
pub fn expected_ads_size(flavor: Flavor, k: usize, n: u64) -> f64 {
    let kf = k as f64;
    match flavor {
        Flavor::BottomK => {
            if n <= k as u64 {
                n as f64
            } else {
                kf + kf * (harmonic_number(n) - harmonic_number(k as u64))
            }
        }
        Flavor::KPartition => kf * harmonic_number(n / k as u64),
        Flavor::KMins => kf * harmonic_number(n),
    }
}
