use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use yule_core::rng::DEFAULT_SEED;
use yule_core::sim::DEFAULT_MAX_LEAVES;
use yule_core::stats::{DEFAULT_ALPHA, DEFAULT_RESAMPLES};

#[derive(Debug, Parser)]
#[command(name = "yule", version, about = "Leaf-depth statistics of pure-birth trees", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of E[G_k], E[S_k], E[G_k^2] and Var(G_k/k).
    ExactMoments(ExactMomentsArgs),
    /// The limiting variance constants and their sum.
    Limits(LimitsArgs),
    /// Independent replicates of the process.
    Simulate(SimulateArgs),
    /// Variance ensembles over a time grid, with bootstrap intervals and theory columns.
    Figure(FigureArgs),
    /// Var(G_k/k) against its limit on a grid of leaf counts.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Significant digits for real-valued fields.
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u8).range(1..=17))]
    pub csv_precision: u8,
    /// Flat key=value file supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Parallelism {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ExactMomentsArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    /// Emit `quantity,value` CSV instead of text.
    #[arg(long)]
    pub csv: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub lambda: f64,
    /// Observation time (continuous mode).
    #[arg(long, value_parser = non_negative_real, conflicts_with = "k_target")]
    pub t: Option<f64>,
    /// Leaf-count target (jump-chain mode).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_target: Option<u64>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEAVES, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_leaves: u64,
    #[command(flatten)]
    pub parallelism: Parallelism,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridUnitsArg {
    /// Grid values are times.
    Time,
    /// Grid values are λt.
    LambdaT,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Comma-separated split rates.
    #[arg(long, value_delimiter = ',', default_value = "1,1.3", value_parser = positive_real)]
    pub lambda: Vec<f64>,
    /// Grid `start:stop:step`, inclusive of `stop`.
    #[arg(long, default_value = "1:10:1", value_parser = parse_grid)]
    pub t_grid: Grid,
    #[arg(long, value_enum, default_value_t = GridUnitsArg::LambdaT)]
    pub grid_units: GridUnitsArg,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Bootstrap resamples per interval.
    #[arg(long, default_value_t = DEFAULT_RESAMPLES as u64, value_parser = clap::value_parser!(u64).range(100..))]
    pub bootstrap: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = unit_interval)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEAVES, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_leaves: u64,
    #[command(flatten)]
    pub parallelism: Parallelism,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Largest leaf count of the default grid {3, 4, 10, 100, ...}.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: u64,
    /// Explicit comma-separated, strictly increasing leaf counts.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub k_points: Option<Vec<u64>>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_real(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("`{s}` is not a number: {e}"))
}

fn positive_real(s: &str) -> Result<f64, String> {
    let x = parse_real(s)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be finite and > 0, got {s}"))
    }
}

fn non_negative_real(s: &str) -> Result<f64, String> {
    let x = parse_real(s)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be finite and >= 0, got {s}"))
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let x = parse_real(s)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {s}"))
    }
}

/// `a:b:step` with `0 <= a <= b` and `step > 0`; points `a + i·step` up to `b`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got `{s}`"));
    };
    let (a, b, step) = (non_negative_real(a)?, non_negative_real(b)?, positive_real(step)?);
    if b < a {
        return Err(format!("stop {b} is below start {a}"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(format!("grid `{s}` has more than 100000 points"));
    }
    Ok(Grid((0..=n).map(|i| a + i as f64 * step).collect()))
}

/// Splice flags from a `--config` file in front of the command-line flags,
/// so explicit flags (parsed later) win.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = Some(args.get(i + 1).context("--config needs a path")?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config file {path}"))?;
    let mut spliced = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{path}:{}: expected key=value, got `{line}`", n + 1);
        };
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        if key == "config" {
            bail!("{path}:{}: nested config files are not supported", n + 1);
        }
        match value {
            "true" => spliced.push(format!("--{key}")),
            "false" => {}
            _ => spliced.push(format!("--{key}={value}")),
        }
    }
    // argv[0], subcommand, then config-derived flags, then the rest
    let split = args.len().min(2);
    let mut out = args[..split].to_vec();
    out.extend(spliced);
    out.extend_from_slice(&args[split..]);
    Ok(out)
}
