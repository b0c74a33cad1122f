use std::path::PathBuf;
use std::process::ExitCode;

use anisotex_core::besov::Order;
use anisotex_core::hywave::Filter;
use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

/// A user-facing problem with the invocation; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(
    name = "anisotex",
    version,
    about = "Simulate operator scaling Gaussian random fields and estimate their anisotropy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one realization and write it as an ANIF file.
    Simulate(SimulateArgs),
    /// Scan diagonal analysis anisotropies and locate the critical-exponent peak.
    Scan(ScanArgs),
    /// Structure functions and directional exponents of one field.
    Analyze(AnalyzeArgs),
    /// Hyperbolic wavelet statistics and the scale-ratio ridge.
    Hywave(HywaveArgs),
    /// Fast self-checks of the whole pipeline.
    Selftest(SelftestArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub alpha0: f64,
    #[arg(long)]
    pub hurst: f64,
    #[arg(long, default_value_t = 1024)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ScanArgs {
    /// ANIF inputs, all drawn from one spec.
    #[arg(long = "in", required_unless_present = "spec", conflicts_with = "spec")]
    pub inputs: Vec<PathBuf>,
    /// Synthesize in memory instead, e.g. `alpha0=0.6,hurst=0.4,n=1024`.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long, default_value_t = 16, requires = "spec")]
    pub reps: usize,
    /// First seed of an in-memory ensemble; overrides `seed=` in `--spec`.
    #[arg(long, requires = "spec")]
    pub seed: Option<u64>,
    #[arg(long, default_value = "2")]
    pub p: Order,
    /// `start:stop:step`, stop included when on the grid.
    #[arg(long, default_value = "0.2:1.8:0.05")]
    pub alpha_grid: String,
    /// Scan CSV; the summary goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "2")]
    pub p: Order,
    /// `u,v`; repeatable. Defaults to both axes.
    #[arg(long = "direction")]
    pub directions: Vec<String>,
    /// Structure-function CSV; exponents go next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct HywaveArgs {
    /// ANIF inputs; their log-statistics are averaged.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "d4")]
    pub filter: Filter,
    #[arg(long, default_value = "2")]
    pub p: Order,
    /// Depths `j1,j2`; defaults to `log2 n - 1` on both axes.
    #[arg(long)]
    pub levels: Option<String>,
    /// Output prefix: writes `<out>.stats.csv`, `<out>.ratios.csv` and `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SelftestArgs {
    /// Skip the Monte-Carlo tent check.
    #[arg(long)]
    pub quick: bool,
    /// Negative control: redraw the determinism sample from another stream.
    #[arg(long, hide = true)]
    pub inject_bad_seed: bool,
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("ANISOTEX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Usage(format!("ANISOTEX_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<anisotex_core::Error>() {
            return if e.is_usage() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_threads().and_then(|()| match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Scan(a) => commands::scan(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Hywave(a) => commands::hywave(a),
        Command::Selftest(a) => commands::selftest(a),
    });
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
