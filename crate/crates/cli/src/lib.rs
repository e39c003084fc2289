//! Subcommands of the `yule` binary.

pub mod args;
pub mod csv;

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context, Result};
use args::{Cli, Command, ConvergenceArgs, ExactMomentsArgs, FigureArgs, GridUnitsArg, LimitsArgs, Output, SimulateArgs};
use csv::{CsvWriter, Field};
use yule_core::exact::{self, MomentStream};
use yule_core::experiments::{self, FigureSpec, GridUnits};
use yule_core::sim::{self, SimConfig};
use yule_core::Exec;

pub const MOMENTS_HEADER: [&str; 5] = ["k", "EG", "ES", "EG2", "var_avg"];
pub const SIMULATE_HEADER: [&str; 6] = ["rep", "z", "g", "s", "avg_depth", "nstar"];
pub const FIGURE_HEADER: [&str; 11] = [
    "lambda",
    "t",
    "var_nstar",
    "var_nstar_lo",
    "var_nstar_hi",
    "var_avg",
    "var_avg_lo",
    "var_avg_hi",
    "mean_avg",
    "theory_total",
    "theory_mean",
];
pub const CONVERGENCE_HEADER: [&str; 3] = ["k", "var_avg", "gap"];
pub const LIMITS_HEADER: [&str; 2] = ["quantity", "value"];

/// What a subcommand reports back to `main`.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Non-fatal failures (e.g. replicates that hit the leaf cap).
    pub failures: usize,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::ExactMoments(a) => exact_moments(&a),
        Command::Limits(a) => limits(&a),
        Command::Simulate(a) => with_threads(a.parallelism.threads, || simulate(&a)),
        Command::Figure(a) => with_threads(a.parallelism.threads, || figure(&a)),
        Command::Convergence(a) => convergence(&a),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<u32>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .context("building worker pool")?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(threads: Option<u32>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    if threads.is_some_and(|n| n > 1) {
        eprintln!("warning: built without the `parallel` feature; --threads ignored");
    }
    f()
}

fn open(output: &Output) -> Result<Box<dyn Write>> {
    Ok(match &output.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(output: &Output, header: &[&str]) -> Result<CsvWriter<Box<dyn Write>>> {
    Ok(CsvWriter::new(open(output)?, output.csv_precision as usize, header)?)
}

pub fn exact_moments(a: &ExactMomentsArgs) -> Result<Outcome> {
    let mut w = csv_writer(&a.output, &MOMENTS_HEADER)?;
    for m in MomentStream::new().take(a.k_max as usize) {
        w.row(&[Field::Int(m.k), Field::Real(m.eg), Field::Real(m.es), Field::Real(m.eg2), Field::Real(m.var_avg)])?;
    }
    w.finish()?;
    Ok(Outcome::default())
}

pub fn limits(a: &LimitsArgs) -> Result<Outcome> {
    let within = exact::limit_expected_cond_variance();
    let between = exact::limit_var_cond_expectation();
    let total = exact::limit_total_variance();
    if (total - 7.0).abs() > 1e-12 {
        bail!("limit sum {total} differs from 7 by more than 1e-12");
    }
    let rows = [
        ("expected_cond_variance", within),
        ("var_cond_expectation", between),
        ("total_variance", total),
    ];
    let digits = a.output.csv_precision as usize;
    if a.csv {
        let mut w = csv_writer(&a.output, &LIMITS_HEADER)?;
        for (name, v) in rows {
            w.raw_row([name.to_string(), csv::fmt_sig(v, digits)])?;
        }
        w.finish()?;
    } else {
        let mut out = open(&a.output)?;
        writeln!(out, "E[Var(G/Z | Z)]  -> 7 - 2pi^2/3 = {}", csv::fmt_sig(within, digits))?;
        writeln!(out, "Var(E[G/Z | Z])  -> 2pi^2/3     = {}", csv::fmt_sig(between, digits))?;
        writeln!(out, "Var(G/Z)         -> sum         = {}", csv::fmt_sig(total, digits))?;
        out.flush()?;
    }
    Ok(Outcome::default())
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let reps = a.reps as usize;
    let results = match (a.t, a.k_target) {
        (_, Some(k)) => {
            let base = SimConfig::discrete(k)?.with_seed(a.seed).with_max_leaves(a.max_leaves);
            Exec::Parallel.map_indexed(reps, |r| sim::run_discrete_outcome(&base.with_replicate(r as u64)))
        }
        (Some(t), None) => experiments::simulate_replicates(a.lambda, t, reps, a.seed, a.max_leaves, Exec::Parallel)?,
        (None, None) => bail!("simulate needs either --t or --k-target"),
    };
    let mut w = csv_writer(&a.output, &SIMULATE_HEADER)?;
    let mut failures = 0;
    for (r, res) in results.iter().enumerate() {
        match res {
            Ok(o) => w.row(&[
                Field::Int(r as u64),
                Field::Int(o.z),
                Field::Int(o.g),
                Field::Int(o.s),
                Field::Real(o.avg_depth),
                Field::Int(o.random_leaf_depth as u64),
            ])?,
            Err(e) => {
                failures += 1;
                eprintln!("replicate {r}: {e}");
                w.row(&[Field::Int(r as u64), Field::Missing, Field::Missing, Field::Missing, Field::Missing, Field::Missing])?;
            }
        }
    }
    w.finish()?;
    Ok(Outcome { failures })
}

pub fn figure_spec(a: &FigureArgs) -> FigureSpec {
    FigureSpec {
        lambdas: a.lambda.clone(),
        t_grid: a.t_grid.0.clone(),
        grid_units: match a.grid_units {
            GridUnitsArg::Time => GridUnits::Time,
            GridUnitsArg::LambdaT => GridUnits::LambdaTime,
        },
        reps: a.reps as usize,
        seed: a.seed,
        b_resamples: a.bootstrap as usize,
        alpha: a.alpha,
        max_leaves: a.max_leaves,
    }
}

pub fn figure(a: &FigureArgs) -> Result<Outcome> {
    let rows = experiments::run_figure(&figure_spec(a))?;
    let mut w = csv_writer(&a.output, &FIGURE_HEADER)?;
    for r in rows {
        w.row(&[
            Field::Real(r.lambda),
            Field::Real(r.t),
            Field::Real(r.var_nstar.variance),
            Field::Real(r.var_nstar.ci_low),
            Field::Real(r.var_nstar.ci_high),
            Field::Real(r.var_avg_depth.variance),
            Field::Real(r.var_avg_depth.ci_low),
            Field::Real(r.var_avg_depth.ci_high),
            Field::Real(r.mean_avg_depth),
            Field::Real(r.theory_total_variance),
            Field::Real(r.theory_mean),
        ])?;
    }
    w.finish()?;
    Ok(Outcome::default())
}

/// `{3, 4}` followed by powers of ten from 10 up to `k_max` (and `k_max` itself).
pub fn default_k_points(k_max: u64) -> Vec<u64> {
    let mut pts: Vec<u64> = [3, 4].into_iter().filter(|&k| k <= k_max).collect();
    let mut p = 10;
    while p <= k_max {
        pts.push(p);
        p = p.saturating_mul(10);
    }
    if pts.last() != Some(&k_max) {
        pts.push(k_max);
    }
    pts.dedup();
    pts
}

pub fn convergence(a: &ConvergenceArgs) -> Result<Outcome> {
    let points = a.k_points.clone().unwrap_or_else(|| default_k_points(a.k_max));
    let rows = experiments::run_convergence_table(&points)?;
    let mut w = csv_writer(&a.output, &CONVERGENCE_HEADER)?;
    for r in rows {
        w.row(&[Field::Int(r.k), Field::Real(r.var_avg), Field::Real(r.gap)])?;
    }
    w.finish()?;
    Ok(Outcome::default())
}
