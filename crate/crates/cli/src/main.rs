//! `qoetm`: generate ladder corpora, emulate target-VMAF encoding, and run
//! bottleneck-sharing scenarios and capacity sweeps.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

mod commands;
mod config;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "qoetm",
    version,
    about = "QoE-aware bottleneck sharing simulator for cloud-gaming video"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic CRF-ladder corpus, one CSV per clip.
    Gen(GenArgs),
    /// Emulate target-VMAF encoding of ladder traces.
    Emulate(EmulateArgs),
    /// Run one scenario per method and capacity, writing per-second records.
    Simulate(SimulateArgs),
    /// Sweep capacities and methods, writing one KPI row per pair.
    Sweep(SweepArgs),
    /// Export cumulative per-session demand at one target and total demand per target.
    ExportShares(SharesArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file whose keys mirror these flags; flags win on conflict.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Number of clips [default: 5].
    #[arg(long)]
    clips: Option<usize>,
    /// Windows (seconds) per clip [default: 1320].
    #[arg(long)]
    windows: Option<usize>,
    /// Generator seed [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated ascending CRF values [default: 20,25,26,...,45].
    #[arg(long, value_delimiter = ',')]
    crfs: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
struct EmulateArgs {
    #[command(flatten)]
    common: Common,
    /// Ladder CSV file, or a directory of them.
    #[arg(long, value_name = "PATH")]
    ladder: Option<PathBuf>,
    /// Target grid as LO:HI or a comma list [default: 10:95].
    #[arg(long)]
    targets: Option<String>,
    /// Also write the clips' average SCCs to avg_scc.csv.
    #[arg(long)]
    scc: bool,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Ladder CSV file or directory; without it the default corpus is generated in memory.
    #[arg(long, value_name = "PATH", conflicts_with = "seed")]
    ladder: Option<PathBuf>,
    /// Seed of the in-memory default corpus [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Total sessions, split evenly over the clips [default: 30].
    #[arg(long)]
    sessions: Option<usize>,
    /// Scenario length in windows [default: 220].
    #[arg(long)]
    len: Option<usize>,
    /// Target grid as LO:HI or a comma list [default: 10:95].
    #[arg(long)]
    targets: Option<String>,
    /// Utility curve TOML file (v_min, v_max, anchors) [default: 50/90 with (50,100) (70,120) (90,130)].
    #[arg(long, value_name = "FILE")]
    curve: Option<PathBuf>,
    /// Max-utility behaviour when the best step does not fit: break or skip [default: break].
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Capacity in bits/s (`50e6`, `50M`) or START:STOP:STEP [default: 50e6].
    #[arg(long)]
    cap: Option<String>,
    /// `all` or comma-separated methods: max-utility, equal-vmaf, rate-fair, mu-per-clip, mu-per-session [default: all].
    #[arg(long, visible_alias = "method")]
    methods: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Capacity range START:STOP:STEP, rates as `10e6` or `10M` [default: 10e6:100e6:1e6].
    #[arg(long)]
    cap: Option<String>,
    /// `all` or comma-separated methods [default: all].
    #[arg(long, visible_alias = "method")]
    methods: Option<String>,
}

#[derive(Debug, Args)]
struct SharesArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Target VMAF of the cumulative table [default: 70].
    #[arg(long)]
    target: Option<u32>,
}

/// Usage errors are reported before any computation starts.
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Emulate(a) => commands::emulate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::ExportShares(a) => commands::export_shares(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
