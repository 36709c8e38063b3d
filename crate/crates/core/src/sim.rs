//! Accuracy simulations for the cardinality estimators.
//!
//! Sketch content at a given cardinality does not depend on how elements
//! are arranged in a graph, only on the ranks assigned to them, so the
//! estimators are exercised on streams of distinct elements: each run
//! assigns fresh ranks, feeds the stream through every requested
//! estimator, and records estimates at a grid of cardinalities. Output is
//! the normalized root mean square error and mean relative error per
//! estimator and grid point.

use crate::distinct::{hll_baseline_estimate, BottomKHipCounter, HllHipCounter};
use crate::error::{Error, Result};
use crate::estimate::PermutationEstimator;
use crate::minhash::{Flavor, MinHashSketch, SketchConfig};
use crate::rank::{mix64, NodeId, PermRank, RankMode, SplitMix64};

/// Estimators the harness can run.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SimEstimator {
    BasicKMins,
    BasicBottomK,
    BasicKPartition,
    /// Inverse-probability counter over a bottom-k sketch; `root = 0` uses
    /// full ranks, `root >= 1` uses base `2^(1/root)` discretized ranks.
    HipBottomK {
        root: u32,
    },
    Permutation,
    HllBaseline,
    HllHip,
}

impl SimEstimator {
    pub fn label(&self) -> String {
        match self {
            SimEstimator::BasicKMins => "kmins-basic".into(),
            SimEstimator::BasicBottomK => "bottomk-basic".into(),
            SimEstimator::BasicKPartition => "kpartition-basic".into(),
            SimEstimator::HipBottomK { root: 0 } => "bottomk-hip".into(),
            SimEstimator::HipBottomK { root: 1 } => "bottomk-hip-base2".into(),
            SimEstimator::HipBottomK { root: 2 } => "bottomk-hip-basesqrt2".into(),
            SimEstimator::HipBottomK { root } => format!("bottomk-hip-base2^(1/{root})"),
            SimEstimator::Permutation => "permutation".into(),
            SimEstimator::HllBaseline => "hll".into(),
            SimEstimator::HllHip => "hll-hip".into(),
        }
    }

    /// Parse a label as accepted on the command line.
    pub fn parse(s: &str) -> Result<SimEstimator> {
        Ok(match s {
            "kmins-basic" => SimEstimator::BasicKMins,
            "bottomk-basic" => SimEstimator::BasicBottomK,
            "kpartition-basic" => SimEstimator::BasicKPartition,
            "bottomk-hip" => SimEstimator::HipBottomK { root: 0 },
            "bottomk-hip-base2" => SimEstimator::HipBottomK { root: 1 },
            "bottomk-hip-basesqrt2" => SimEstimator::HipBottomK { root: 2 },
            "permutation" => SimEstimator::Permutation,
            "hll" => SimEstimator::HllBaseline,
            "hll-hip" => SimEstimator::HllHip,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown estimator `{other}`"
                )))
            }
        })
    }
}

/// The default set: all basic flavors, the inverse-probability bottom-k
/// counter, the permutation estimator, and both register counters.
pub fn default_estimators() -> Vec<SimEstimator> {
    vec![
        SimEstimator::BasicKMins,
        SimEstimator::BasicBottomK,
        SimEstimator::BasicKPartition,
        SimEstimator::HipBottomK { root: 0 },
        SimEstimator::Permutation,
        SimEstimator::HllBaseline,
        SimEstimator::HllHip,
    ]
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: u64,
    pub k: usize,
    pub runs: u32,
    pub seed: u64,
    pub estimators: Vec<SimEstimator>,
    /// Cardinalities to measure at; defaults to [`cardinality_grid`].
    pub grid: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRow {
    pub cardinality: u64,
    pub estimator: String,
    pub nrmse: f64,
    /// Monte-Carlo standard error of the NRMSE estimate (delta method).
    pub nrmse_se: f64,
    pub mre: f64,
    pub runs: u32,
}

/// Log-spaced measurement grid: powers of 1.2 rounded to integers,
/// deduplicated, capped at and including `n`.
pub fn cardinality_grid(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut v = 1.0f64;
    while v.round() as u64 <= n {
        out.push(v.round() as u64);
        v *= 1.2;
    }
    out.push(n);
    out.sort_unstable();
    out.dedup();
    out
}

enum EstState {
    Basic(MinHashSketch),
    Hip(BottomKHipCounter),
    Perm(PermutationEstimator),
    Hll(HllHipCounter),
    HllBase(HllHipCounter),
}

impl EstState {
    fn offer(&mut self, node: NodeId, sigma: &[u64]) -> Result<()> {
        match self {
            EstState::Basic(s) => {
                s.offer(node);
            }
            EstState::Hip(c) => {
                c.offer(node);
            }
            EstState::Perm(p) => {
                p.offer(PermRank(sigma[node.0 as usize]))?;
            }
            EstState::Hll(c) | EstState::HllBase(c) => {
                c.offer(node);
            }
        }
        Ok(())
    }

    fn estimate(&self) -> f64 {
        match self {
            EstState::Basic(s) => s.estimate().expect("validated estimator").value,
            EstState::Hip(c) => c.estimate(),
            EstState::Perm(p) => p.estimate(),
            EstState::Hll(c) => c.estimate(),
            EstState::HllBase(c) => hll_baseline_estimate(c.registers()).1,
        }
    }
}

fn make_state(which: SimEstimator, cfg: &SimConfig, run_seed: u64) -> Result<EstState> {
    let k = cfg.k;
    Ok(match which {
        SimEstimator::BasicKMins => EstState::Basic(MinHashSketch::new(SketchConfig::new(
            Flavor::KMins,
            k,
            RankMode::Full,
            run_seed,
        )?)?),
        SimEstimator::BasicBottomK => EstState::Basic(MinHashSketch::new(SketchConfig::new(
            Flavor::BottomK,
            k,
            RankMode::Full,
            run_seed,
        )?)?),
        SimEstimator::BasicKPartition => EstState::Basic(MinHashSketch::new(SketchConfig::new(
            Flavor::KPartition,
            k,
            RankMode::Full,
            run_seed,
        )?)?),
        SimEstimator::HipBottomK { root: 0 } => EstState::Hip(BottomKHipCounter::new(k, run_seed)?),
        SimEstimator::HipBottomK { root } => {
            EstState::Hip(BottomKHipCounter::with_base_root(k, root, run_seed)?)
        }
        SimEstimator::Permutation => EstState::Perm(PermutationEstimator::new(cfg.n, k)?),
        SimEstimator::HllHip => EstState::Hll(HllHipCounter::new(k, run_seed)?),
        SimEstimator::HllBaseline => EstState::HllBase(HllHipCounter::new(k, run_seed)?),
    })
}

/// Run the simulation and report error statistics per estimator and grid
/// cardinality, plus constant reference rows `ref-basic` and `ref-hip`
/// carrying the closed-form error levels of the basic and
/// inverse-probability estimators.
pub fn run_simulation(cfg: &SimConfig) -> Result<Vec<SimRow>> {
    if cfg.runs == 0 {
        return Err(Error::InvalidParameter("need at least one run".into()));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("need at least one element".into()));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidParameter("no estimators requested".into()));
    }
    if cfg.estimators.contains(&SimEstimator::BasicKMins) && cfg.k <= 1 {
        return Err(Error::Unsupported(
            "the k-mins estimator needs k > 1".into(),
        ));
    }
    let grid = match &cfg.grid {
        Some(g) => {
            let mut g = g.clone();
            g.sort_unstable();
            g.dedup();
            if g.is_empty() || g[0] == 0 || *g.last().unwrap() > cfg.n {
                return Err(Error::InvalidParameter("grid must lie in 1..=n".into()));
            }
            g
        }
        None => cardinality_grid(cfg.n),
    };

    let ne = cfg.estimators.len();
    let mut sum_sq = vec![0.0f64; ne * grid.len()];
    let mut sum_quad = vec![0.0f64; ne * grid.len()];
    let mut sum_abs = vec![0.0f64; ne * grid.len()];

    let mut seeder = SplitMix64::new(mix64(cfg.seed));
    let needs_sigma = cfg.estimators.contains(&SimEstimator::Permutation);
    for _run in 0..cfg.runs {
        let run_seed = seeder.next_u64();
        let sigma = if needs_sigma {
            let mut sigma: Vec<u64> = (1..=cfg.n).collect();
            let mut rng = SplitMix64::new(mix64(run_seed ^ 0x7065726d));
            for i in (1..sigma.len()).rev() {
                let j = rng.next_below(i as u64 + 1) as usize;
                sigma.swap(i, j);
            }
            sigma
        } else {
            Vec::new()
        };
        let mut states: Vec<EstState> = cfg
            .estimators
            .iter()
            .map(|&e| make_state(e, cfg, run_seed))
            .collect::<Result<_>>()?;
        let mut at = 0usize;
        for i in 0..cfg.n {
            for s in states.iter_mut() {
                s.offer(NodeId(i), &sigma)?;
            }
            let c = i + 1;
            if at < grid.len() && grid[at] == c {
                for (ei, s) in states.iter().enumerate() {
                    let rel = s.estimate() / c as f64 - 1.0;
                    sum_sq[ei * grid.len() + at] += rel * rel;
                    sum_quad[ei * grid.len() + at] += rel * rel * rel * rel;
                    sum_abs[ei * grid.len() + at] += rel.abs();
                }
                at += 1;
            }
        }
    }

    let mut rows = Vec::with_capacity((ne + 2) * grid.len());
    let runs = cfg.runs as f64;
    for (ei, est) in cfg.estimators.iter().enumerate() {
        let label = est.label();
        for (gi, &c) in grid.iter().enumerate() {
            let m2 = sum_sq[ei * grid.len() + gi] / runs;
            let m4 = sum_quad[ei * grid.len() + gi] / runs;
            let nrmse = m2.sqrt();
            let var_m2 = ((m4 - m2 * m2) / runs).max(0.0);
            let nrmse_se = if nrmse > 0.0 {
                var_m2.sqrt() / (2.0 * nrmse)
            } else {
                0.0
            };
            rows.push(SimRow {
                cardinality: c,
                estimator: label.clone(),
                nrmse,
                nrmse_se,
                mre: sum_abs[ei * grid.len() + gi] / runs,
                runs: cfg.runs,
            });
        }
    }
    let kf = cfg.k as f64;
    if cfg.k > 2 {
        let cv_basic = 1.0 / (kf - 2.0).sqrt();
        let mre_basic = (2.0 / (std::f64::consts::PI * (kf - 2.0))).sqrt();
        for &c in &grid {
            rows.push(SimRow {
                cardinality: c,
                estimator: "ref-basic".into(),
                nrmse: cv_basic,
                nrmse_se: 0.0,
                mre: mre_basic,
                runs: cfg.runs,
            });
        }
    }
    if cfg.k > 1 {
        let cv_hip = 1.0 / (2.0 * (kf - 1.0)).sqrt();
        let mre_hip = (1.0 / (std::f64::consts::PI * (kf - 1.0))).sqrt();
        for &c in &grid {
            rows.push(SimRow {
                cardinality: c,
                estimator: "ref-hip".into(),
                nrmse: cv_hip,
                nrmse_se: 0.0,
                mre: mre_hip,
                runs: cfg.runs,
            });
        }
    }
    Ok(rows)
}

/// NRMSE of one estimator at one cardinality, from a result set.
pub fn row_nrmse<'a>(rows: &'a [SimRow], estimator: &str, cardinality: u64) -> Option<&'a SimRow> {
    rows.iter()
        .find(|r| r.estimator == estimator && r.cardinality == cardinality)
}
