use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};

use adsketch::{
    build_local_updates, build_pruned_dijkstra, build_weighted_ads, expected_ads_size,
    hip_weighted, hip_weights, hll_baseline_estimate, run_simulation, snapshot, AdsSet,
    BottomKHipCounter, BuildStats, Direction, Error, Flavor, Graph, HipWeights, HllHipCounter,
    Kernel, NodeId, NodeWeights, RankMode, SimConfig, SimEstimator, SketchConfig,
};

use crate::{BuildArgs, DistinctArgs, QueryArgs, SimulateArgs};

/// Command errors carrying their process exit code: 1 for input problems,
/// 2 for internal invariant violations.
#[derive(Debug)]
pub struct CliError {
    message: String,
    internal: bool,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            internal: false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.internal {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let internal = matches!(e, Error::Internal(_) | Error::Corrupt(_));
        CliError {
            message: e.to_string(),
            internal,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError {
            message: e.to_string(),
            internal: false,
        }
    }
}

fn parse_flavor(s: &str) -> Result<Flavor, CliError> {
    match s {
        "bottomk" => Ok(Flavor::BottomK),
        "kmins" => Ok(Flavor::KMins),
        "kpartition" => Ok(Flavor::KPartition),
        other => Err(CliError::input(format!(
            "unknown flavor `{other}` (expected bottomk|kmins|kpartition)"
        ))),
    }
}

fn parse_base(s: &str) -> Result<RankMode, CliError> {
    match s {
        "full" => Ok(RankMode::Full),
        "2" => Ok(RankMode::Pow2Root(1)),
        "sqrt2" => Ok(RankMode::Pow2Root(2)),
        other => Err(CliError::input(format!(
            "unknown base `{other}` (expected full|2|sqrt2)"
        ))),
    }
}

fn parse_direction(s: &str) -> Result<Direction, CliError> {
    match s {
        "forward" => Ok(Direction::Forward),
        "backward" => Ok(Direction::Backward),
        other => Err(CliError::input(format!(
            "unknown direction `{other}` (expected forward|backward)"
        ))),
    }
}

fn parse_kernel(s: &str) -> Result<Kernel, CliError> {
    let kernel = if s == "harmonic" {
        Kernel::Harmonic
    } else if s == "reachability" {
        Kernel::Reachability
    } else if let Some(d) = s.strip_prefix("threshold:") {
        Kernel::Threshold(
            d.parse()
                .map_err(|_| CliError::input(format!("bad threshold distance `{d}`")))?,
        )
    } else if let Some(l) = s.strip_prefix("exp:") {
        Kernel::Exponential(
            l.parse()
                .map_err(|_| CliError::input(format!("bad decay rate `{l}`")))?,
        )
    } else {
        return Err(CliError::input(format!(
            "unknown kernel `{s}` (expected threshold:<d>|exp:<lambda>|harmonic|reachability)"
        )));
    };
    kernel.validate()?;
    Ok(kernel)
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Backward => "backward",
    }
}

/// Node filter for queries: listed nodes carry the given weight, everything
/// else weighs 0.
struct FilterWeights {
    map: HashMap<u64, f64>,
}

impl FilterWeights {
    fn parse(text: &str) -> Result<FilterWeights, CliError> {
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| CliError::input(format!("filter line {}: {what}", lineno + 1));
            let mut fields = line.split_whitespace();
            let node: u64 = fields
                .next()
                .ok_or_else(|| bad("expected `node weight`"))?
                .parse()
                .map_err(|_| bad("bad node id"))?;
            let w: f64 = match fields.next() {
                Some(s) => s.parse().map_err(|_| bad("bad weight"))?,
                None => 1.0,
            };
            if !w.is_finite() || w < 0.0 {
                return Err(bad("weights must be nonnegative"));
            }
            if fields.next().is_some() {
                return Err(bad("trailing fields"));
            }
            map.insert(node, w);
        }
        Ok(FilterWeights { map })
    }

    fn get(&self, node: NodeId) -> f64 {
        self.map.get(&node.0).copied().unwrap_or(0.0)
    }
}

fn header(out: &mut dyn Write, command: &str, fields: &[(&str, String)]) -> Result<(), CliError> {
    writeln!(out, "# adsketch {command}")?;
    let rendered: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "# {}", rendered.join(" "))?;
    Ok(())
}

pub fn build(args: &BuildArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let flavor = parse_flavor(&args.flavor)?;
    let mode = parse_base(&args.base)?;
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::input(format!("{}: {e}", args.input)))?;
    let graph = Graph::parse_edge_list(&text, args.undirected)?;

    let directions: Vec<Direction> = match args.direction.as_str() {
        "both" => vec![Direction::Forward, Direction::Backward],
        other => vec![parse_direction(other)?],
    };

    let weights = match &args.weights {
        Some(path) => {
            let wtext =
                fs::read_to_string(path).map_err(|e| CliError::input(format!("{path}: {e}")))?;
            Some(NodeWeights::parse(&wtext)?)
        }
        None => None,
    };

    header(
        out,
        "build",
        &[
            ("input", args.input.clone()),
            ("output", args.output.clone()),
            ("undirected", args.undirected.to_string()),
            ("k", args.k.to_string()),
            ("flavor", args.flavor.clone()),
            ("seed", args.seed.to_string()),
            ("base", args.base.clone()),
            ("epsilon", args.epsilon.to_string()),
            ("algorithm", args.algorithm.clone()),
            ("direction", args.direction.clone()),
            (
                "weights",
                args.weights.clone().unwrap_or_else(|| "none".into()),
            ),
        ],
    )?;
    writeln!(out, "nodes,arcs,direction,mean_ads_size,expected_size")?;

    let mut sets: Vec<AdsSet> = Vec::new();
    for dir in directions {
        let (set, _stats): (AdsSet, BuildStats) = match &weights {
            Some(w) => {
                if flavor != Flavor::BottomK || mode != RankMode::Full {
                    return Err(CliError::input(
                        "weighted builds support --flavor bottomk with --base full",
                    ));
                }
                build_weighted_ads(&graph, w, args.k, args.seed, dir)?
            }
            None => {
                let cfg = SketchConfig::new(flavor, args.k, mode, args.seed)?;
                match args.algorithm.as_str() {
                    "dijkstra" => build_pruned_dijkstra(&graph, &cfg, dir)?,
                    "local" => build_local_updates(&graph, &cfg, dir, args.epsilon)?,
                    "auto" => {
                        if matches!(mode, RankMode::Pow2Root(_)) || args.epsilon > 0.0 {
                            build_local_updates(&graph, &cfg, dir, args.epsilon)?
                        } else {
                            build_pruned_dijkstra(&graph, &cfg, dir)?
                        }
                    }
                    other => {
                        return Err(CliError::input(format!(
                            "unknown algorithm `{other}` (expected auto|dijkstra|local)"
                        )))
                    }
                }
            }
        };
        let expected = if weights.is_some() {
            "na".to_string()
        } else {
            format!(
                "{}",
                expected_ads_size(flavor, args.k, graph.node_count() as u64)
            )
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            graph.node_count(),
            graph.arc_count(),
            direction_name(dir),
            set.mean_size(),
            expected
        )?;
        sets.push(set);
    }

    let mut file = fs::File::create(&args.output)
        .map_err(|e| CliError::input(format!("{}: {e}", args.output)))?;
    let refs: Vec<&AdsSet> = sets.iter().collect();
    snapshot::write_ads_sets(&refs, &mut file)?;
    Ok(())
}

enum QueryKind {
    Neighborhood(f64),
    Centrality(Kernel, Option<FilterWeights>),
    Qg(FilterWeights),
}

impl QueryKind {
    fn label(&self, args: &QueryArgs) -> String {
        match self {
            QueryKind::Neighborhood(d) => format!("neighborhood:{d}"),
            QueryKind::Centrality(..) => {
                format!("centrality:{}", args.kernel.as_deref().unwrap_or(""))
            }
            QueryKind::Qg(_) => "qg".into(),
        }
    }

    fn eval(&self, hw: &HipWeights) -> Result<f64, CliError> {
        Ok(match self {
            QueryKind::Neighborhood(d) => hw.neighborhood(*d),
            QueryKind::Centrality(kernel, filter) => match filter {
                Some(f) => hw.centrality(kernel, |n| f.get(n))?,
                None => hw.centrality(kernel, |_| 1.0)?,
            },
            QueryKind::Qg(f) => hw.qg(|n, _| f.get(n))?,
        })
    }
}

pub fn query(args: &QueryArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let bytes =
        fs::read(&args.snapshot).map_err(|e| CliError::input(format!("{}: {e}", args.snapshot)))?;
    let sets = snapshot::read_ads_sets(&mut bytes.as_slice())?;
    let dir = parse_direction(&args.direction)?;
    let set = sets.iter().find(|s| s.direction() == dir).ok_or_else(|| {
        CliError::input(format!(
            "snapshot holds no {} sketch set",
            direction_name(dir)
        ))
    })?;

    let load_filter = |path: &Option<String>| -> Result<Option<FilterWeights>, CliError> {
        match path {
            Some(p) => {
                let text =
                    fs::read_to_string(p).map_err(|e| CliError::input(format!("{p}: {e}")))?;
                Ok(Some(FilterWeights::parse(&text)?))
            }
            None => Ok(None),
        }
    };

    let kind = match args.query.as_str() {
        "neighborhood" => QueryKind::Neighborhood(
            args.distance
                .ok_or_else(|| CliError::input("neighborhood queries need --distance"))?,
        ),
        "centrality" => {
            let kernel = args
                .kernel
                .as_deref()
                .ok_or_else(|| CliError::input("centrality queries need --kernel"))?;
            QueryKind::Centrality(parse_kernel(kernel)?, load_filter(&args.filter)?)
        }
        "qg" => QueryKind::Qg(
            load_filter(&args.filter)?
                .ok_or_else(|| CliError::input("qg queries need --filter"))?,
        ),
        other => {
            return Err(CliError::input(format!(
                "unknown query `{other}` (expected neighborhood|centrality|qg)"
            )))
        }
    };

    let weights = match &args.weights {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::input(format!("{path}: {e}")))?;
            Some(NodeWeights::parse(&text)?)
        }
        None => None,
    };
    if set.config().mode == RankMode::Weighted && weights.is_none() {
        return Err(CliError::input(
            "this snapshot was built with node weights; pass --weights",
        ));
    }

    let nodes: Vec<u64> = match &args.nodes {
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::input(format!("bad node id `{s}`")))
            })
            .collect::<Result<_, _>>()?,
        None => (0..set.len() as u64).collect(),
    };

    header(
        out,
        "query",
        &[
            ("snapshot", args.snapshot.clone()),
            ("query", args.query.clone()),
            (
                "distance",
                args.distance
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "none".into()),
            ),
            (
                "kernel",
                args.kernel.clone().unwrap_or_else(|| "none".into()),
            ),
            (
                "filter",
                args.filter.clone().unwrap_or_else(|| "none".into()),
            ),
            (
                "weights",
                args.weights.clone().unwrap_or_else(|| "none".into()),
            ),
            ("direction", args.direction.clone()),
            ("k", set.config().k.to_string()),
            ("flavor", set.config().flavor.name().to_string()),
            ("seed", set.config().seed.to_string()),
        ],
    )?;
    writeln!(out, "node,query,estimate")?;

    let label = kind.label(args);
    let mut answered = 0usize;
    for &v in &nodes {
        let row = set
            .node(NodeId(v))
            .ok()
            .map(|ads| -> Result<f64, CliError> {
                let hw = match &weights {
                    Some(w) => hip_weighted(ads, w)?,
                    None => hip_weights(ads)?,
                };
                kind.eval(&hw)
            });
        match row {
            Some(Ok(value)) => {
                answered += 1;
                writeln!(out, "{v},{label},{value}")?;
            }
            Some(Err(e)) => return Err(e),
            None => {
                writeln!(out, "{v},{label},error")?;
            }
        }
    }
    if answered == 0 && !nodes.is_empty() {
        return Err(CliError::input("no queried node exists in the snapshot"));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut estimators = match &args.estimators {
        Some(list) => list
            .split(',')
            .map(|s| SimEstimator::parse(s.trim()))
            .collect::<Result<Vec<_>, _>>()?,
        None => adsketch::default_estimators(),
    };
    match parse_base(&args.base)? {
        RankMode::Full => {}
        RankMode::Pow2Root(root) => {
            let variant = SimEstimator::HipBottomK { root };
            if !estimators.contains(&variant) {
                estimators.push(variant);
            }
        }
        RankMode::Weighted => unreachable!(),
    }
    let cfg = SimConfig {
        n: args.n,
        k: args.k,
        runs: args.runs,
        seed: args.seed,
        estimators,
        grid: None,
    };
    let rows = run_simulation(&cfg)?;
    header(
        out,
        "simulate",
        &[
            ("n", args.n.to_string()),
            ("k", args.k.to_string()),
            ("runs", args.runs.to_string()),
            ("seed", args.seed.to_string()),
            (
                "estimators",
                args.estimators.clone().unwrap_or_else(|| "default".into()),
            ),
            ("base", args.base.clone()),
        ],
    )?;
    writeln!(out, "cardinality,estimator,nrmse,nrmse_se,mre,runs")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.cardinality, r.estimator, r.nrmse, r.nrmse_se, r.mre, r.runs
        )?;
    }
    Ok(())
}

/// FNV-1a over the token bytes: a stable element id for hashing streams.
fn token_id(token: &str) -> NodeId {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    NodeId(h)
}

pub fn distinct(args: &DistinctArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = if args.input == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        fs::read_to_string(&args.input)
            .map_err(|e| CliError::input(format!("{}: {e}", args.input)))?
    };

    enum Counter {
        Registers(HllHipCounter, bool), // true: report the baseline estimate
        BottomK(BottomKHipCounter),
    }
    let mut counter = match args.algo.as_str() {
        "hip" => Counter::Registers(
            HllHipCounter::with_base_root(args.k, args.base_exp, args.seed)?,
            false,
        ),
        "hll" => {
            if args.base_exp != 1 {
                return Err(CliError::input(
                    "the baseline estimator is defined for --base-exp 1",
                ));
            }
            Counter::Registers(HllHipCounter::new(args.k, args.seed)?, true)
        }
        // full-precision ranks; --base-exp does not apply here
        "bottomk-hip" => Counter::BottomK(BottomKHipCounter::new(args.k, args.seed)?),
        other => {
            return Err(CliError::input(format!(
                "unknown algorithm `{other}` (expected hip|hll|bottomk-hip)"
            )))
        }
    };

    header(
        out,
        "distinct",
        &[
            ("input", args.input.clone()),
            ("k", args.k.to_string()),
            ("base-exp", args.base_exp.to_string()),
            ("algo", args.algo.clone()),
            ("report-every", args.report_every.to_string()),
            ("seed", args.seed.to_string()),
        ],
    )?;
    writeln!(out, "items_seen,estimate,saturated")?;

    let mut seen = 0u64;
    let report = |seen: u64, c: &Counter, out: &mut dyn Write| -> Result<(), CliError> {
        let (estimate, saturated) = match c {
            Counter::Registers(h, false) => (h.estimate(), h.saturated()),
            Counter::Registers(h, true) => (hll_baseline_estimate(h.registers()).1, h.saturated()),
            Counter::BottomK(b) => (b.estimate(), false),
        };
        writeln!(out, "{seen},{estimate},{}", saturated as u8)?;
        Ok(())
    };
    for raw in text.lines() {
        let token = raw.trim();
        if token.is_empty() {
            continue;
        }
        let id = token_id(token);
        match &mut counter {
            Counter::Registers(h, _) => {
                h.offer(id);
            }
            Counter::BottomK(b) => {
                b.offer(id);
            }
        }
        seen += 1;
        if args.report_every > 0 && seen.is_multiple_of(args.report_every) {
            report(seen, &counter, out)?;
        }
    }
    if seen > 0 && (args.report_every == 0 || !seen.is_multiple_of(args.report_every)) {
        report(seen, &counter, out)?;
    }
    Ok(())
}
