//! MinHash sketches of sets in three flavors, with their cardinality
//! estimators and merge.
//!
//! A bottom-k sketch keeps the k smallest ranks of one permutation, a k-mins
//! sketch keeps the minimum rank of each of k permutations, and a k-partition
//! sketch keeps the minimum rank inside each of k random buckets. All three
//! are coordinated through the session seed: the same element receives the
//! same rank in every sketch built under that seed.

use crate::ads::Ads;
use crate::error::{Error, Result};
use crate::rank::{bucket_of, rank_of, rank_of_rep, NodeId, RankKey, RankMode, UnitRank};

/// Sampling scheme of a MinHash sketch.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Flavor {
    BottomK,
    KMins,
    KPartition,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::BottomK => "bottomk",
            Flavor::KMins => "kmins",
            Flavor::KPartition => "kpartition",
        }
    }
}

/// Shared configuration of a sketch or sketch set: flavor, size parameter,
/// rank regime, and seed. Structures built under equal configurations are
/// coordinated and may be merged or compared.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SketchConfig {
    pub flavor: Flavor,
    pub k: usize,
    pub mode: RankMode,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(flavor: Flavor, k: usize, mode: RankMode, seed: u64) -> Result<SketchConfig> {
        let cfg = SketchConfig {
            flavor,
            k,
            mode,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if let RankMode::Pow2Root(i) = self.mode {
            if i == 0 {
                return Err(Error::InvalidParameter(
                    "base exponent root must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of independent rank components: k for k-mins, 1 otherwise.
    pub(crate) fn comp_count(&self) -> usize {
        match self.flavor {
            Flavor::KMins => self.k,
            _ => 1,
        }
    }

    /// Per-component retention parameter: k for bottom-k, 1 for the bottom-1
    /// components of k-mins and k-partition.
    pub(crate) fn comp_k(&self) -> usize {
        match self.flavor {
            Flavor::BottomK => self.k,
            _ => 1,
        }
    }

    pub(crate) fn unit_rank(&self, comp: usize, node: NodeId) -> UnitRank {
        match self.flavor {
            Flavor::KMins => rank_of_rep(node, comp as u32, self.seed),
            _ => rank_of(node, self.seed),
        }
    }

    /// Rank payload and comparison key of `node` in component `comp`.
    /// Not defined for the weighted regime, which draws ranks from node
    /// weights supplied separately.
    pub(crate) fn hash_key(&self, comp: usize, node: NodeId) -> (u64, RankKey) {
        let r = self.unit_rank(comp, node);
        match self.mode {
            RankMode::Full => (
                r.bits(),
                RankKey {
                    value: r.value(),
                    tie: node.0,
                },
            ),
            RankMode::Pow2Root(root) => {
                let h = exponent_for_root(r.value(), root);
                (
                    h as u64,
                    RankKey {
                        value: value_for_root(h, root),
                        tie: 0,
                    },
                )
            }
            RankMode::Weighted => unreachable!("weighted ranks need explicit node weights"),
        }
    }

    /// Reconstruct the comparison key of a stored payload.
    pub(crate) fn key_from_payload(&self, payload: u64, node: NodeId) -> RankKey {
        match self.mode {
            RankMode::Full => RankKey {
                value: UnitRank::from_bits(payload).value(),
                tie: node.0,
            },
            RankMode::Pow2Root(root) => RankKey {
                value: value_for_root(payload as u32, root),
                tie: 0,
            },
            RankMode::Weighted => RankKey {
                value: f64::from_bits(payload),
                tie: node.0,
            },
        }
    }

    pub(crate) fn bucket_index(&self, node: NodeId) -> usize {
        bucket_of(node, self.k, self.seed)
            .expect("k validated at construction")
            .zero_based()
    }
}

/// `ceil(-log_b v)` for `b = 2^(1/root)`.
#[inline]
pub(crate) fn exponent_for_root(v: f64, root: u32) -> u32 {
    let e = (-v.log2() * root as f64).ceil();
    if e < 1.0 {
        1
    } else {
        e as u32
    }
}

/// `b^-h` for `b = 2^(1/root)`.
#[inline]
pub(crate) fn value_for_root(h: u32, root: u32) -> f64 {
    (-(h as f64) / root as f64).exp2()
}

/// Rank material of one element, as consumed by sketch updates. Produced
/// from the configuration's hash streams, or crafted directly in tests.
#[derive(Clone, Debug)]
pub(crate) enum RankMaterial {
    BottomK {
        payload: u64,
        key: RankKey,
    },
    KMins(Vec<(u64, RankKey)>),
    KPartition {
        bucket: usize,
        payload: u64,
        key: RankKey,
    },
}

impl RankMaterial {
    pub(crate) fn for_node(cfg: &SketchConfig, node: NodeId) -> RankMaterial {
        match cfg.flavor {
            Flavor::BottomK => {
                let (payload, key) = cfg.hash_key(0, node);
                RankMaterial::BottomK { payload, key }
            }
            Flavor::KMins => {
                RankMaterial::KMins((0..cfg.k).map(|h| cfg.hash_key(h, node)).collect())
            }
            Flavor::KPartition => {
                let (payload, key) = cfg.hash_key(0, node);
                RankMaterial::KPartition {
                    bucket: cfg.bucket_index(node),
                    payload,
                    key,
                }
            }
        }
    }
}

/// Stored bottom-k entries: `(payload, node)` pairs, ascending by rank key.
pub(crate) type BottomKEntries = Vec<(u64, NodeId)>;
/// One optional `(payload, node)` minimum per permutation or bucket.
pub(crate) type RegisterEntries = Vec<Option<(u64, NodeId)>>;

#[derive(Clone, Debug, PartialEq)]
enum MhState {
    BottomK(BottomKEntries),
    Registers(RegisterEntries),
}

/// A MinHash sketch of the set of elements offered to it.
#[derive(Clone, Debug, PartialEq)]
pub struct MinHashSketch {
    cfg: SketchConfig,
    state: MhState,
}

/// Result of a cardinality estimator; `exact` is set when the value is
/// deterministic given the sketch (e.g. a bottom-k sketch holding fewer
/// than k elements).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CardinalityEstimate {
    pub value: f64,
    pub exact: bool,
}

impl MinHashSketch {
    pub fn new(cfg: SketchConfig) -> Result<MinHashSketch> {
        cfg.validate()?;
        if cfg.mode == RankMode::Weighted {
            return Err(Error::Unsupported(
                "weighted MinHash sketches are not provided".into(),
            ));
        }
        let state = match cfg.flavor {
            Flavor::BottomK => MhState::BottomK(Vec::new()),
            Flavor::KMins | Flavor::KPartition => MhState::Registers(vec![None; cfg.k]),
        };
        Ok(MinHashSketch { cfg, state })
    }

    pub fn config(&self) -> &SketchConfig {
        &self.cfg
    }

    /// Offer an element; returns whether the stored state changed.
    /// Re-offering an element never changes the sketch, and an update never
    /// increases any stored rank.
    pub fn offer(&mut self, node: NodeId) -> bool {
        let material = RankMaterial::for_node(&self.cfg, node);
        self.offer_material(node, &material)
    }

    pub(crate) fn offer_material(&mut self, node: NodeId, material: &RankMaterial) -> bool {
        match (&mut self.state, material) {
            (MhState::BottomK(entries), RankMaterial::BottomK { payload, key }) => {
                if entries.iter().any(|&(_, n)| n == node) {
                    return false;
                }
                let pos = entries.partition_point(|&(p, n)| self.cfg.key_from_payload(p, n) < *key);
                if entries.len() < self.cfg.k {
                    entries.insert(pos, (*payload, node));
                    true
                } else if pos < self.cfg.k {
                    entries.insert(pos, (*payload, node));
                    entries.pop();
                    true
                } else {
                    false
                }
            }
            (MhState::Registers(regs), RankMaterial::KMins(keys)) => {
                let mut changed = false;
                for (h, &(payload, key)) in keys.iter().enumerate() {
                    changed |= update_register(&self.cfg, &mut regs[h], payload, key, node);
                }
                changed
            }
            (
                MhState::Registers(regs),
                RankMaterial::KPartition {
                    bucket,
                    payload,
                    key,
                },
            ) => update_register(&self.cfg, &mut regs[*bucket], *payload, *key, node),
            _ => unreachable!("state matches flavor by construction"),
        }
    }

    /// Number of stored entries (bottom-k) or occupied registers.
    pub fn filled(&self) -> usize {
        match &self.state {
            MhState::BottomK(entries) => entries.len(),
            MhState::Registers(regs) => regs.iter().filter(|r| r.is_some()).count(),
        }
    }

    /// Stored `(rank value, node)` pairs; bottom-k lists ascend by rank,
    /// register flavors are indexed by permutation or bucket.
    pub fn contents(&self) -> Vec<Option<(f64, NodeId)>> {
        match &self.state {
            MhState::BottomK(entries) => entries
                .iter()
                .map(|&(p, n)| Some((self.cfg.key_from_payload(p, n).value, n)))
                .collect(),
            MhState::Registers(regs) => regs
                .iter()
                .map(|r| r.map(|(p, n)| (self.cfg.key_from_payload(p, n).value, n)))
                .collect(),
        }
    }

    /// Dispatch to the flavor's estimator.
    pub fn estimate(&self) -> Result<CardinalityEstimate> {
        match self.cfg.flavor {
            Flavor::BottomK => self.estimate_bottomk(),
            Flavor::KMins => self.estimate_kmins(),
            Flavor::KPartition => self.estimate_kpartition(),
        }
    }

    /// The closed-form estimators below assume collision-free ranks; rank
    /// collisions under a discretized regime bias them. Discretized sketches
    /// are served by the inverse-probability counters instead.
    fn require_full_ranks(&self) -> Result<()> {
        match self.cfg.mode {
            RankMode::Full => Ok(()),
            _ => Err(Error::Unsupported(
                "cardinality estimators need full-precision ranks; use an \
                 inverse-probability counter for discretized sketches"
                    .into(),
            )),
        }
    }

    /// `(k-1)/tau_k` with `tau_k` the k-th smallest rank; exact count when
    /// the sketch holds fewer than k elements.
    pub fn estimate_bottomk(&self) -> Result<CardinalityEstimate> {
        self.require_full_ranks()?;
        let MhState::BottomK(entries) = &self.state else {
            return Err(Error::InvalidParameter(
                "estimator requires a bottom-k sketch".into(),
            ));
        };
        if entries.len() < self.cfg.k {
            return Ok(CardinalityEstimate {
                value: entries.len() as f64,
                exact: true,
            });
        }
        let (p, n) = entries[self.cfg.k - 1];
        let tau = self.cfg.key_from_payload(p, n).value;
        Ok(CardinalityEstimate {
            value: (self.cfg.k as f64 - 1.0) / tau,
            exact: false,
        })
    }

    /// `(k-1) / sum_h -ln(1 - x_h)`; unbiased for k > 1.
    pub fn estimate_kmins(&self) -> Result<CardinalityEstimate> {
        self.require_full_ranks()?;
        let MhState::Registers(regs) = &self.state else {
            return Err(Error::InvalidParameter(
                "estimator requires a k-mins sketch".into(),
            ));
        };
        if self.cfg.flavor != Flavor::KMins {
            return Err(Error::InvalidParameter(
                "estimator requires a k-mins sketch".into(),
            ));
        }
        if self.cfg.k <= 1 {
            return Err(Error::Unsupported("k-mins estimator needs k > 1".into()));
        }
        if regs.iter().all(|r| r.is_none()) {
            return Ok(CardinalityEstimate {
                value: 0.0,
                exact: true,
            });
        }
        let mut denom = 0.0f64;
        for reg in regs {
            let x = match reg {
                Some((p, n)) => self.cfg.key_from_payload(*p, *n).value,
                None => 1.0,
            };
            denom += -(-x).ln_1p();
        }
        Ok(CardinalityEstimate {
            value: (self.cfg.k as f64 - 1.0) / denom,
            exact: false,
        })
    }

    /// Conditioned on the k' nonempty buckets: `k'(k'-1) / sum -ln(1-x)`.
    /// With one nonempty bucket the count of occupied registers (1) is
    /// returned; the residual bias there cannot be corrected without
    /// knowing the cardinality.
    pub fn estimate_kpartition(&self) -> Result<CardinalityEstimate> {
        self.require_full_ranks()?;
        let MhState::Registers(regs) = &self.state else {
            return Err(Error::InvalidParameter(
                "estimator requires a k-partition sketch".into(),
            ));
        };
        if self.cfg.flavor != Flavor::KPartition {
            return Err(Error::InvalidParameter(
                "estimator requires a k-partition sketch".into(),
            ));
        }
        let occupied = regs.iter().filter(|r| r.is_some()).count();
        match occupied {
            0 => Ok(CardinalityEstimate {
                value: 0.0,
                exact: true,
            }),
            1 => Ok(CardinalityEstimate {
                value: 1.0,
                exact: false,
            }),
            kp => {
                let mut denom = 0.0f64;
                for reg in regs.iter().flatten() {
                    let x = self.cfg.key_from_payload(reg.0, reg.1).value;
                    denom += -(-x).ln_1p();
                }
                Ok(CardinalityEstimate {
                    value: (kp as f64) * (kp as f64 - 1.0) / denom,
                    exact: false,
                })
            }
        }
    }

    /// Sketch of the union of the two underlying sets.
    pub fn merge(&self, other: &MinHashSketch) -> Result<MinHashSketch> {
        if self.cfg != other.cfg {
            return Err(Error::InvalidParameter(
                "cannot merge sketches with different flavor/k/mode/seed".into(),
            ));
        }
        let state = match (&self.state, &other.state) {
            (MhState::BottomK(a), MhState::BottomK(b)) => {
                let mut all: Vec<(u64, NodeId)> = a.iter().chain(b.iter()).copied().collect();
                all.sort_by(|&(pa, na), &(pb, nb)| {
                    self.cfg
                        .key_from_payload(pa, na)
                        .cmp(&self.cfg.key_from_payload(pb, nb))
                        .then(na.cmp(&nb))
                });
                all.dedup_by_key(|&mut (_, n)| n);
                all.truncate(self.cfg.k);
                MhState::BottomK(all)
            }
            (MhState::Registers(a), MhState::Registers(b)) => {
                let mut merged = a.clone();
                for (slot, reg) in merged.iter_mut().zip(b.iter()) {
                    if let Some((p, n)) = reg {
                        let replace = match slot {
                            None => true,
                            Some((sp, sn)) => {
                                self.cfg.key_from_payload(*p, *n)
                                    < self.cfg.key_from_payload(*sp, *sn)
                            }
                        };
                        if replace {
                            *slot = Some((*p, *n));
                        }
                    }
                }
                MhState::Registers(merged)
            }
            _ => unreachable!("equal configs imply equal state shapes"),
        };
        Ok(MinHashSketch {
            cfg: self.cfg,
            state,
        })
    }

    /// The MinHash sketch of the d-neighborhood of the sketch owner,
    /// extracted from an all-distances sketch built under the same
    /// configuration.
    pub fn from_ads(ads: &Ads, d: f64, flavor: Flavor, k: usize) -> Result<MinHashSketch> {
        let cfg = *ads.config();
        if cfg.flavor != flavor || cfg.k != k {
            return Err(Error::InvalidParameter(format!(
                "requested {}/{k} but the sketch was built as {}/{}",
                flavor.name(),
                cfg.flavor.name(),
                cfg.k
            )));
        }
        if cfg.mode == RankMode::Weighted {
            return Err(Error::Unsupported(
                "weighted MinHash extraction is not provided".into(),
            ));
        }
        let state = match cfg.flavor {
            Flavor::BottomK => {
                let mut within: Vec<(u64, NodeId)> = ads
                    .component(0)
                    .iter()
                    .filter(|e| e.distance <= d)
                    .map(|e| (e.rank_bits, e.node))
                    .collect();
                within.sort_by(|&(pa, na), &(pb, nb)| {
                    cfg.key_from_payload(pa, na)
                        .cmp(&cfg.key_from_payload(pb, nb))
                        .then(na.cmp(&nb))
                });
                within.truncate(k);
                MhState::BottomK(within)
            }
            Flavor::KMins => {
                let mut regs: Vec<Option<(u64, NodeId)>> = vec![None; k];
                for (h, reg) in regs.iter_mut().enumerate() {
                    for e in ads.component(h).iter().filter(|e| e.distance <= d) {
                        let key = cfg.key_from_payload(e.rank_bits, e.node);
                        let better = match reg {
                            None => true,
                            Some((sp, sn)) => key < cfg.key_from_payload(*sp, *sn),
                        };
                        if better {
                            *reg = Some((e.rank_bits, e.node));
                        }
                    }
                }
                MhState::Registers(regs)
            }
            Flavor::KPartition => {
                let mut regs: Vec<Option<(u64, NodeId)>> = vec![None; k];
                for e in ads.component(0).iter().filter(|e| e.distance <= d) {
                    let b = cfg.bucket_index(e.node);
                    let key = cfg.key_from_payload(e.rank_bits, e.node);
                    let better = match &regs[b] {
                        None => true,
                        Some((sp, sn)) => key < cfg.key_from_payload(*sp, *sn),
                    };
                    if better {
                        regs[b] = Some((e.rank_bits, e.node));
                    }
                }
                MhState::Registers(regs)
            }
        };
        Ok(MinHashSketch { cfg, state })
    }

    pub(crate) fn from_parts(
        cfg: SketchConfig,
        bottomk: Option<BottomKEntries>,
        regs: Option<RegisterEntries>,
    ) -> Result<MinHashSketch> {
        let state = match cfg.flavor {
            Flavor::BottomK => MhState::BottomK(
                bottomk.ok_or_else(|| Error::Corrupt("missing bottom-k entries".into()))?,
            ),
            _ => {
                MhState::Registers(regs.ok_or_else(|| Error::Corrupt("missing registers".into()))?)
            }
        };
        Ok(MinHashSketch { cfg, state })
    }

    pub(crate) fn parts(&self) -> (Option<&BottomKEntries>, Option<&RegisterEntries>) {
        match &self.state {
            MhState::BottomK(e) => (Some(e), None),
            MhState::Registers(r) => (None, Some(r)),
        }
    }
}

fn update_register(
    cfg: &SketchConfig,
    reg: &mut Option<(u64, NodeId)>,
    payload: u64,
    key: RankKey,
    node: NodeId,
) -> bool {
    let better = match reg {
        None => true,
        Some((sp, sn)) => key < cfg.key_from_payload(*sp, *sn),
    };
    if better {
        *reg = Some((payload, node));
    }
    better
}
