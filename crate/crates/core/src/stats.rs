//! Ensemble estimators: sample moments, bootstrap percentile intervals for
//! the variance, and a chi-square goodness-of-fit test.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;
use crate::sum::CompensatedSum;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;

pub fn sample_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("values", "mean of an empty sample"));
    }
    let s: CompensatedSum = values.iter().copied().collect();
    Ok(s.value() / values.len() as f64)
}

/// Unbiased (divisor `n − 1`) sample variance.
///
/// Shifted two-pass with the compensating correction term, so constant
/// input gives exactly zero.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::domain("values", "variance needs at least two values"));
    }
    Ok(variance_unchecked(values))
}

fn variance_unchecked(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let shift = values[0];
    let mean: CompensatedSum = values.iter().map(|x| x - shift).collect();
    let mean = mean.value() / n;
    let mut sq = CompensatedSum::new();
    let mut lin = CompensatedSum::new();
    for x in values {
        let d = x - shift - mean;
        sq.add(d * d);
        lin.add(d);
    }
    let lin = lin.value();
    ((sq.value() - lin * lin / n) / (n - 1.0)).max(0.0)
}

/// Standard error of the sample mean.
pub fn standard_error(values: &[f64]) -> Result<f64> {
    Ok((sample_variance(values)? / values.len() as f64).sqrt())
}

/// Nearest-rank percentile of already sorted data: the element at 1-based
/// rank `ceil(q·n)`, clamped to `[1, n]`.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Sample summary with a bootstrap percentile interval for the variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub b_resamples: usize,
}

impl EnsembleSummary {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn overlaps(&self, other: &EnsembleSummary) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Percentile bootstrap for the sample variance.
///
/// Resample `r` draws `n` indices with replacement from stream
/// `(seed, BOOTSTRAP, r)`; the interval is the nearest-rank `α/2` and
/// `1 − α/2` percentiles of the `b` resampled variances.
pub fn bootstrap_ci_variance(values: &[f64], b: usize, alpha: f64, seed: u64) -> Result<EnsembleSummary> {
    bootstrap_ci_variance_with(values, b, alpha, seed, Exec::default())
}

pub fn bootstrap_ci_variance_with(
    values: &[f64],
    b: usize,
    alpha: f64,
    seed: u64,
    exec: Exec,
) -> Result<EnsembleSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::domain("values", "bootstrap needs at least two values"));
    }
    if b < 100 {
        return Err(Error::domain("b", format!("need at least 100 resamples, got {b}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let mean = sample_mean(values)?;
    let variance = variance_unchecked(values);
    if values.iter().all(|&x| x == values[0]) {
        return Ok(EnsembleSummary {
            n,
            mean,
            variance: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            alpha,
            b_resamples: b,
        });
    }
    let mut stats = exec.map_indexed(b, |r| {
        let mut rng = rng::stream(seed, rng::BOOTSTRAP, r as u64);
        let resample: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
        variance_unchecked(&resample)
    });
    stats.sort_by(f64::total_cmp);
    Ok(EnsembleSummary {
        n,
        mean,
        variance,
        ci_low: nearest_rank(&stats, alpha / 2.0),
        ci_high: nearest_rank(&stats, 1.0 - alpha / 2.0),
        alpha,
        b_resamples: b,
    })
}

/// Result of a Pearson chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    /// Pooled category boundaries: bin `i` covers input categories `bins[i].0 ..= bins[i].1`.
    pub bins: Vec<(usize, usize)>,
    pub p_value: f64,
}

impl GoodnessOfFit {
    /// Upper `alpha` critical value of the reference chi-square law.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        ChiSquared::new(self.degrees_of_freedom as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(1.0 - alpha)
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.statistic < self.critical_value(alpha)
    }
}

/// Pearson test of `observed` counts against category probabilities `probs`
/// (which must cover the whole support, so they sum to 1). Adjacent
/// categories are pooled left to right until each pooled bin expects at
/// least `min_expected` counts; a short remainder joins the last bin.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<GoodnessOfFit> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::domain("observed", "counts and probabilities must have equal, non-zero length"));
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::domain("probs", format!("probabilities sum to {mass}, not 1")));
    }
    let n = total as f64;
    let mut bins: Vec<(usize, usize, u64, f64)> = Vec::new();
    let mut start = 0;
    let (mut obs, mut exp) = (0u64, 0.0f64);
    for (i, (&o, &p)) in observed.iter().zip(probs).enumerate() {
        obs += o;
        exp += n * p;
        if exp >= min_expected {
            bins.push((start, i, obs, exp));
            start = i + 1;
            obs = 0;
            exp = 0.0;
        }
    }
    if start < observed.len() {
        match bins.last_mut() {
            Some(last) => {
                last.1 = observed.len() - 1;
                last.2 += obs;
                last.3 += exp;
            }
            None => bins.push((start, observed.len() - 1, obs, exp)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::domain("observed", "fewer than two bins after pooling"));
    }
    let statistic = bins
        .iter()
        .map(|&(_, _, o, e)| (o as f64 - e).powi(2) / e)
        .sum::<f64>();
    let degrees_of_freedom = bins.len() - 1;
    let p_value = 1.0
        - ChiSquared::new(degrees_of_freedom as f64)
            .expect("positive degrees of freedom")
            .cdf(statistic);
    Ok(GoodnessOfFit {
        statistic,
        degrees_of_freedom,
        bins: bins.iter().map(|&(a, b, _, _)| (a, b)).collect(),
        p_value,
    })
}
