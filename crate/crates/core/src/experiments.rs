//! Ensembles over a time grid and the discrete convergence table.
//!
//! Replicate `r` of rate index `i` always uses simulation stream
//! `(seed, i·reps + r)` and follows one sample path observed at every grid
//! time, so rows do not depend on thread count or scheduling.

use crate::error::{Error, Result};
use crate::exact::{self, MomentStream};
use crate::exec::Exec;
use crate::rng;
use crate::sim::{self, SimConfig, SimOutcome, DEFAULT_MAX_LEAVES};
use crate::stats::{self, EnsembleSummary, DEFAULT_ALPHA, DEFAULT_RESAMPLES};

/// How the values of [`FigureSpec::t_grid`] are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridUnits {
    /// Grid values are times.
    Time,
    /// Grid values are `λt`; each rate is observed at `t = value / λ`.
    #[default]
    LambdaTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub lambdas: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub grid_units: GridUnits,
    pub reps: usize,
    pub seed: u64,
    pub b_resamples: usize,
    pub alpha: f64,
    pub max_leaves: u64,
}

impl Default for FigureSpec {
    fn default() -> Self {
        FigureSpec {
            lambdas: vec![1.0, 1.3],
            t_grid: (1..=10).map(f64::from).collect(),
            grid_units: GridUnits::LambdaTime,
            reps: 10_000,
            seed: rng::DEFAULT_SEED,
            b_resamples: DEFAULT_RESAMPLES,
            alpha: DEFAULT_ALPHA,
            max_leaves: DEFAULT_MAX_LEAVES,
        }
    }
}

impl FigureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::domain("reps", "need at least two replicates"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::domain("lambdas", "need at least one finite rate > 0"));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::domain("t_grid", "grid values must be finite and >= 0"));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("t_grid", "grid must be strictly increasing"));
        }
        if self.b_resamples < 100 {
            return Err(Error::domain("b_resamples", "need at least 100 resamples"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("alpha", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Observation times for rate `lambda`.
    pub fn times_for(&self, lambda: f64) -> Vec<f64> {
        match self.grid_units {
            GridUnits::Time => self.t_grid.clone(),
            GridUnits::LambdaTime => self.t_grid.iter().map(|u| u / lambda).collect(),
        }
    }
}

/// One `(λ, t)` cell of the figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    pub lambda: f64,
    pub t: f64,
    /// Variance (with CI) of the depth of one random leaf per tree.
    pub var_nstar: EnsembleSummary,
    /// Variance (with CI) of the per-tree average depth; `mean` is the ensemble mean.
    pub var_avg_depth: EnsembleSummary,
    pub mean_avg_depth: f64,
    pub theory_total_variance: f64,
    pub theory_mean: f64,
}

/// Sub-seed for the bootstrap of statistic `which` (0 = N*, 1 = G/Z) in cell `cell`.
pub fn bootstrap_seed(seed: u64, cell: usize, which: u64) -> u64 {
    rng::mix(seed, 2 * cell as u64 + which)
}

/// Base simulation config for replicate `replicate` of rate `lambda`.
pub fn replicate_config(lambda: f64, t_end: f64, seed: u64, replicate: u64, max_leaves: u64) -> Result<SimConfig> {
    Ok(SimConfig::continuous(lambda, t_end)?
        .with_seed(seed)
        .with_replicate(replicate)
        .with_max_leaves(max_leaves))
}

/// Independent replicates at a single time, in replicate order.
pub fn simulate_replicates(
    lambda: f64,
    t_end: f64,
    reps: usize,
    seed: u64,
    max_leaves: u64,
    exec: Exec,
) -> Result<Vec<Result<SimOutcome>>> {
    replicate_config(lambda, t_end, seed, 0, max_leaves)?;
    Ok(exec.map_indexed(reps, |r| {
        replicate_config(lambda, t_end, seed, r as u64, max_leaves).and_then(|c| sim::run_continuous(&c))
    }))
}

/// Like [`simulate_replicates`] but fails on the first capacity error.
pub fn simulate_ensemble(
    lambda: f64,
    t_end: f64,
    reps: usize,
    seed: u64,
    max_leaves: u64,
    exec: Exec,
) -> Result<Vec<SimOutcome>> {
    simulate_replicates(lambda, t_end, reps, seed, max_leaves, exec)?
        .into_iter()
        .enumerate()
        .map(|(r, o)| o.map_err(|e| e.in_cell(format!("lambda={lambda}, t={t_end}, replicate={r}"))))
        .collect()
}

pub fn run_figure(spec: &FigureSpec) -> Result<Vec<FigureRow>> {
    run_figure_with(spec, Exec::default())
}

pub fn run_figure_with(spec: &FigureSpec, exec: Exec) -> Result<Vec<FigureRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.lambdas.len() * spec.t_grid.len());
    for (li, &lambda) in spec.lambdas.iter().enumerate() {
        let times = spec.times_for(lambda);
        let offset = (li * spec.reps) as u64;
        let paths = exec.try_map_indexed(spec.reps, |r| {
            let config = replicate_config(lambda, 0.0, spec.seed, offset + r as u64, spec.max_leaves)?;
            sim::run_observed(&config, &times)
                .map_err(|e| e.in_cell(format!("lambda={lambda}, replicate={r}")))
        })?;
        for (ti, &t) in times.iter().enumerate() {
            let cell = rows.len();
            let nstar: Vec<f64> = paths.iter().map(|p| p[ti].random_leaf_depth as f64).collect();
            let avg: Vec<f64> = paths.iter().map(|p| p[ti].avg_depth).collect();
            let cell_err = |e: Error| e.in_cell(format!("lambda={lambda}, t={t}"));
            let var_nstar = stats::bootstrap_ci_variance_with(
                &nstar,
                spec.b_resamples,
                spec.alpha,
                bootstrap_seed(spec.seed, cell, 0),
                exec,
            )
            .map_err(cell_err)?;
            let var_avg_depth = stats::bootstrap_ci_variance_with(
                &avg,
                spec.b_resamples,
                spec.alpha,
                bootstrap_seed(spec.seed, cell, 1),
                exec,
            )
            .map_err(cell_err)?;
            let theory = exact::theory_point(lambda, t).map_err(cell_err)?;
            rows.push(FigureRow {
                lambda,
                t,
                var_nstar,
                var_avg_depth,
                mean_avg_depth: var_avg_depth.mean,
                theory_total_variance: theory.total_variance,
                theory_mean: theory.mean_avg_depth,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub k: u64,
    pub var_avg: f64,
    /// `7 − 2π²/3 − Var(G_k/k)`
    pub gap: f64,
}

/// `Var(G_k/k)` and its distance to the limit at each requested `k`.
pub fn run_convergence_table(k_points: &[u64]) -> Result<Vec<ConvergenceRow>> {
    if k_points.is_empty() {
        return Ok(Vec::new());
    }
    if k_points[0] < 1 {
        return Err(Error::domain("k_points", "leaf counts must be at least 1"));
    }
    if k_points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("k_points", "must be strictly increasing"));
    }
    let limit = exact::limit_expected_cond_variance();
    let mut wanted = k_points.iter().peekable();
    let mut out = Vec::with_capacity(k_points.len());
    for m in MomentStream::new() {
        let Some(&&k) = wanted.peek() else { break };
        if m.k == k {
            out.push(ConvergenceRow {
                k,
                var_avg: m.var_avg,
                gap: limit - m.var_avg,
            });
            wanted.next();
        }
    }
    Ok(out)
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::domain("xs", "need at least two paired points"));
    }
    let mx = stats::sample_mean(xs)?;
    let my = stats::sample_mean(ys)?;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("xs", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
