//! Command-line surface: `build` sketches a graph and snapshots it, `query`
//! answers neighborhood/centrality/statistics queries from a snapshot,
//! `simulate` reproduces estimator accuracy curves as CSV, and `distinct`
//! counts distinct tokens in a stream.
//!
//! All output is CSV with `#`-prefixed header comments echoing the full
//! configuration; identical invocations produce byte-identical output.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::io::Write;

pub use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "adsketch", version, about = "All-distances sketching toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build sketches for every node of a graph and write a snapshot.
    Build(BuildArgs),
    /// Answer queries from a sketch snapshot.
    Query(QueryArgs),
    /// Estimator accuracy simulation over streams of distinct elements.
    Simulate(SimulateArgs),
    /// Approximate distinct counting over a token stream.
    Distinct(DistinctArgs),
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Edge list: one `u v [length]` arc per line, `#` comments.
    #[arg(long)]
    pub input: String,
    /// Snapshot file to write.
    #[arg(long)]
    pub output: String,
    /// Treat edges as undirected.
    #[arg(long)]
    pub undirected: bool,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// bottomk | kmins | kpartition
    #[arg(long, default_value = "bottomk")]
    pub flavor: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// full | 2 | sqrt2
    #[arg(long, default_value = "full")]
    pub base: String,
    /// Acceptance-radius slack for the local-updates builder.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// auto | dijkstra | local
    #[arg(long, default_value = "auto")]
    pub algorithm: String,
    /// forward | backward | both
    #[arg(long, default_value = "forward")]
    pub direction: String,
    /// Node weight file (`node beta` lines): builds a weighted sketch.
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Snapshot produced by `build`.
    #[arg(long)]
    pub snapshot: String,
    /// neighborhood | centrality | qg
    #[arg(long)]
    pub query: String,
    /// Distance bound for neighborhood queries.
    #[arg(long)]
    pub distance: Option<f64>,
    /// `threshold:<d>` | `exp:<lambda>` | harmonic | reachability
    #[arg(long)]
    pub kernel: Option<String>,
    /// Node filter file (`node weight` lines; absent nodes weigh 0).
    #[arg(long)]
    pub filter: Option<String>,
    /// Node weights the snapshot was built with (weighted sketches only).
    #[arg(long)]
    pub weights: Option<String>,
    /// forward | backward (which stored set to query).
    #[arg(long, default_value = "forward")]
    pub direction: String,
    /// Comma-separated node ids; default all nodes.
    #[arg(long)]
    pub nodes: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Largest cardinality (stream length).
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 500)]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated estimator names; default runs the full set.
    #[arg(long)]
    pub estimators: Option<String>,
    /// full | 2 | sqrt2: adds a discretized-rank variant of the
    /// inverse-probability estimator alongside the full-rank one.
    #[arg(long, default_value = "full")]
    pub base: String,
}

#[derive(Args, Debug)]
pub struct DistinctArgs {
    /// Token file, one token per line; `-` reads standard input.
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    /// i in base 2^(1/i) for the register counters.
    #[arg(long, default_value_t = 1)]
    pub base_exp: u32,
    /// hip | hll | bottomk-hip
    #[arg(long, default_value = "hip")]
    pub algo: String,
    /// Emit a running-estimate row every N items (0: final row only).
    #[arg(long, default_value_t = 0)]
    pub report_every: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parse and run; returns the process exit code and writes rows to `out`.
/// Input errors exit 1, internal invariant violations exit 2.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match try_run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("adsketch: {e}");
            e.exit_code()
        }
    }
}

pub fn try_run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Build(a) => commands::build(a, out),
        Command::Query(a) => commands::query(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
        Command::Distinct(a) => commands::distinct(a, out),
    }
}
