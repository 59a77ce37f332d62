//! `hitprob` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical or policy failure,
//! 3 I/O failure.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hitprob::mcsim::{DEFAULT_MAX_STEPS, DEFAULT_WALKS};
use hitprob::XWindow;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "hitprob",
    version,
    about = "First-hit distributions of lattice random walks on regular surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the boundary system and write `x,p` for one start point.
    Compute(ComputeArgs),
    /// Run seeded Monte Carlo walks and write `x,count`.
    Mc(McArgs),
    /// Run both and write a JSON comparison report.
    Compare(CompareArgs),
    /// Write `k,H` for one level, or `theta,phi` samples with `--phi`.
    Hcoeff(HcoeffArgs),
}

#[derive(Debug, Args)]
pub struct Target {
    /// Surface file.
    #[arg(long)]
    pub surface: PathBuf,
    /// Start point `k,n`.
    #[arg(long = "from", value_name = "K,N", value_parser = parse_point, allow_hyphen_values = true)]
    pub from: (i64, i64),
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long, default_value_t = DEFAULT_WALKS)]
    pub walks: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub target: Target,
    /// Target abscissae `lo..hi`; defaults to `-M-50..M+50`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<XWindow>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub target: Target,
    #[command(flatten)]
    pub walk: WalkArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub target: Target,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<XWindow>,
    /// Largest total-variation distance that still passes.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct HcoeffArgs {
    /// Level `n`.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Largest offset `k`.
    #[arg(long, default_value_t = 10)]
    pub k_max: u64,
    /// Sample φ(θ) on `[0, π]` instead.
    #[arg(long)]
    pub phi: bool,
    /// Number of θ samples for `--phi`.
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<(i64, i64), String> {
    let (k, n) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `k,n`, got `{s}`"))?;
    let k = k.trim().parse().map_err(|e| format!("bad k `{k}`: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("bad n `{n}`: {e}"))?;
    Ok((k, n))
}

fn parse_window(s: &str) -> Result<XWindow, String> {
    s.parse().map_err(|e: hitprob::SolveError| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compute(a) => commands::compute(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Hcoeff(a) => commands::hcoeff(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hitprob: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
