//! Finite-time quantities for the continuous-time process.
//!
//! `Z(t)` is geometric: `P(Z(t) = k) = e^{-λt} q^{k-1}` with `q = 1 − e^{-λt}`,
//! so everything here depends on `(λ, t)` only through `x = λt`.

use std::f64::consts::PI;

use super::moments::MomentStream;
use super::limit_expected_cond_variance;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

fn check_rate_time(lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(lambda * t)
}

/// `q = 1 − e^{-x}` without cancellation for small `x`.
fn success_complement(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `P(Z(t) = k)`.
pub fn z_pmf(k: u64, lambda: f64, t: f64) -> Result<f64> {
    let x = check_rate_time(lambda, t)?;
    if k < 1 {
        return Err(Error::domain("k", "leaf count must be at least 1"));
    }
    let q = success_complement(x);
    if k == 1 {
        return Ok((-x).exp());
    }
    Ok((-x + (k - 1) as f64 * q.ln()).exp())
}

/// `E[H_{Z(t)}] = λt / (1 − e^{-λt})`, equal to 1 at `t = 0`.
///
/// The unconditional mean of the average depth `G/Z` is `2 (E[H_Z] − 1)`.
pub fn mean_harmonic_sum(lambda: f64, t: f64) -> Result<f64> {
    let x = check_rate_time(lambda, t)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(x / success_complement(x))
}

/// `E[G(t)/Z(t)]`.
pub fn mean_avg_depth(lambda: f64, t: f64) -> Result<f64> {
    Ok(2.0 * (mean_harmonic_sum(lambda, t)? - 1.0))
}

/// Dilogarithm `Li₂(x) = Σ_{k≥1} x^k / k²` on `[0, 1]`.
///
/// Summed directly for `x <= 1/2`; above that the reflection
/// `Li₂(x) = π²/6 − ln x · ln(1−x) − Li₂(1−x)` keeps the series argument small.
pub fn dilog(x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "dilog argument {x} outside [0, 1]");
    if x == 1.0 {
        return PI * PI / 6.0;
    }
    if x > 0.5 {
        return PI * PI / 6.0 - x.ln() * (-x).ln_1p() - dilog(1.0 - x);
    }
    let mut sum = CompensatedSum::new();
    let mut power = x;
    let mut k = 1.0_f64;
    // tail after term k is below x^{k+1}/(1−x) <= 2 x^{k+1}
    while power > 1e-18 * sum.value().max(f64::MIN_POSITIVE) {
        sum.add(power / (k * k));
        power *= x;
        k += 1.0;
    }
    sum.value()
}

/// `Var(E[G(t)/Z(t) | Z(t)]) = 4 (Σ_k q^{k-1}/k² + x²/q − x²/q²)`.
///
/// Evaluated as `4 (Li₂(q)/q − (x/q)² e^{-x})`; 0 at `t = 0`.
pub fn var_cond_expectation(lambda: f64, t: f64) -> Result<f64> {
    let x = check_rate_time(lambda, t)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let q = success_complement(x);
    let ratio = x / q;
    Ok((4.0 * (dilog(q) / q - ratio * ratio * (-x).exp())).max(0.0))
}

/// Truncation control for the geometric mixtures below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Stop once the certified tail bound is below this.
    pub target: f64,
    /// Hard cap on the number of terms.
    pub max_terms: u64,
    /// When the cap is hit, accept the value if its bound is at most this.
    pub accept: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            target: 1e-10,
            max_terms: 100_000_000,
            accept: 1e-6,
        }
    }
}

/// A truncated series value with its certified error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub bound: f64,
    pub terms: u64,
}

/// `E[Var(G(t)/Z(t) | Z(t))] = Σ_k Var(G_k/k) P(Z(t) = k)`.
pub fn expected_cond_variance(lambda: f64, t: f64) -> Result<SeriesValue> {
    expected_cond_variance_with(lambda, t, SeriesOptions::default())
}

/// Truncated at `K` terms, the remainder is `Σ_{k>K} v_k p_k` with
/// `Σ_{k>K} p_k = q^K`. `v_k = Var(G_k/k)` increases towards its limit `L`,
/// so the remainder lies in `[v_{K+1} q^K, L q^K]`; the midpoint is added and
/// half the width is the reported bound.
pub fn expected_cond_variance_with(lambda: f64, t: f64, opts: SeriesOptions) -> Result<SeriesValue> {
    let x = check_rate_time(lambda, t)?;
    let limit = limit_expected_cond_variance();
    let q = success_complement(x);
    let mut p = (-x).exp();
    // q^K, the probability mass beyond the K terms summed so far
    let mut beyond = 1.0;
    let mut acc = CompensatedSum::new();
    let mut stream = MomentStream::new().peekable();
    let mut terms = 0;
    loop {
        let m = stream.next().expect("stream is infinite");
        acc.add(m.var_avg * p);
        terms += 1;
        beyond *= q;
        p *= q;
        let next_var = stream.peek().expect("stream is infinite").var_avg;
        let bound = 0.5 * (limit - next_var).max(0.0) * beyond;
        if bound < opts.target || terms >= opts.max_terms {
            if bound > opts.target && bound > opts.accept {
                return Err(Error::Accuracy {
                    terms,
                    bound,
                    target: opts.accept,
                });
            }
            let tail = 0.5 * (limit + next_var) * beyond;
            return Ok(SeriesValue {
                value: acc.value() + tail,
                bound,
                terms,
            });
        }
    }
}

/// `Var(N*(t))` for the depth of one uniform leaf of one tree:
/// `E[S/Z] − E[G/Z]²`, with `E[S_k/k]` mixed over the geometric law of `Z`.
///
/// Truncated when `q^K (E[S_K]/K)` drops below `1e-12` times the partial sum;
/// `E[S_k]/k` grows only like `(2 ln k)²`, so this is a heuristic cut, not a
/// certified bound.
pub fn var_random_leaf_depth(lambda: f64, t: f64) -> Result<f64> {
    let x = check_rate_time(lambda, t)?;
    let q = success_complement(x);
    let mut p = (-x).exp();
    let mut beyond = 1.0;
    let mut second = CompensatedSum::new();
    for m in MomentStream::new() {
        let es_over_k = m.es / m.k as f64;
        second.add(es_over_k * p);
        p *= q;
        beyond *= q;
        if beyond * (es_over_k + 1.0) < 1e-12 * second.value().max(1.0) || m.k >= 100_000_000 {
            break;
        }
    }
    let mean = mean_avg_depth(lambda, t)?;
    Ok(second.value() - mean * mean)
}

/// Both terms of the law-of-total-variance split of `Var(G(t)/Z(t))` given `Z(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub lambda: f64,
    pub t: f64,
    pub mean_avg_depth: f64,
    pub var_cond_expectation: f64,
    pub expected_cond_variance: f64,
    pub total_variance: f64,
}

pub fn theory_point(lambda: f64, t: f64) -> Result<TheoryPoint> {
    let var_cond_expectation = var_cond_expectation(lambda, t)?;
    let expected_cond_variance = expected_cond_variance(lambda, t)?.value;
    Ok(TheoryPoint {
        lambda,
        t,
        mean_avg_depth: mean_avg_depth(lambda, t)?,
        var_cond_expectation,
        expected_cond_variance,
        total_variance: var_cond_expectation + expected_cond_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::limit_var_cond_expectation;
    use std::f64::consts::LN_2;

    #[test]
    fn pmf_values() {
        assert_eq!(z_pmf(1, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(z_pmf(2, 1.0, 0.0).unwrap(), 0.0);
        for k in 1..=30 {
            let p = z_pmf(k, 1.0, LN_2).unwrap();
            assert!((p - 0.5f64.powi(k as i32)).abs() < 1e-15 * p.max(1e-300) * 10.0);
        }
        assert!(z_pmf(0, 1.0, 1.0).is_err());
        assert!(z_pmf(1, 0.0, 1.0).is_err());
        assert!(z_pmf(1, 1.0, -1.0).is_err());
    }

    #[test]
    fn pmf_normalises() {
        for x in [0.1, 1.0, 3.0, 7.0] {
            let q = success_complement(x);
            // tail after K terms is q^K
            let k_max = ((1e-13f64).ln() / q.ln()).ceil() as u64;
            let s: CompensatedSum = (1..=k_max).map(|k| z_pmf(k, 1.0, x).unwrap()).collect();
            assert!((s.value() - 1.0).abs() < 1e-12, "x = {x}: {}", s.value());
        }
    }

    #[test]
    fn harmonic_mean_closed_form() {
        assert!((mean_harmonic_sum(1.0, LN_2).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert_eq!(mean_harmonic_sum(1.0, 0.0).unwrap(), 1.0);
        let big = mean_harmonic_sum(1.0, 40.0).unwrap();
        assert!((big - 40.0).abs() < 1e-12);
        assert!(mean_harmonic_sum(-1.0, 1.0).is_err());
    }

    #[test]
    fn dilog_reference_points() {
        assert_eq!(dilog(0.0), 0.0);
        let half = PI * PI / 12.0 - LN_2 * LN_2 / 2.0;
        assert!((dilog(0.5) - half).abs() < 1e-15);
        assert!((dilog(1.0) - PI * PI / 6.0).abs() < 1e-15);
        // reflection branch
        let x = 0.9;
        assert!((dilog(x) + dilog(1.0 - x) - (PI * PI / 6.0 - x.ln() * (1.0 - x).ln())).abs() < 1e-14);
    }

    #[test]
    fn var_cond_expectation_at_ln2() {
        // 4 (π²/6 − ln²2 + 2 ln²2 − 4 ln²2)
        let l2 = LN_2 * LN_2;
        let want = 4.0 * (PI * PI / 6.0 - 3.0 * l2);
        let got = var_cond_expectation(1.0, LN_2).unwrap();
        assert!((got - want).abs() < 1e-14);
        assert!((got - 0.8143).abs() < 1e-4);
    }

    #[test]
    fn var_cond_expectation_limits() {
        assert_eq!(var_cond_expectation(1.0, 0.0).unwrap(), 0.0);
        assert!(var_cond_expectation(1.0, 1e-6).unwrap() < 1e-5);
        let v = var_cond_expectation(1.0, 20.0).unwrap();
        assert!((v - limit_var_cond_expectation()).abs() < 1e-3);
    }

    #[test]
    fn depends_only_on_lambda_t() {
        for t in [0.3, 1.0, 4.5, 9.0] {
            assert_eq!(var_cond_expectation(1.0, t).unwrap(), var_cond_expectation(2.0, t / 2.0).unwrap());
            assert_eq!(mean_harmonic_sum(1.0, t).unwrap(), mean_harmonic_sum(4.0, t / 4.0).unwrap());
            assert_eq!(z_pmf(5, 1.0, t).unwrap(), z_pmf(5, 0.5, t * 2.0).unwrap());
            let a = expected_cond_variance(1.0, t).unwrap().value;
            let b = expected_cond_variance(2.0, t / 2.0).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn expected_cond_variance_limits() {
        let zero = expected_cond_variance(1.0, 0.0).unwrap();
        assert_eq!(zero.value, 0.0);
        assert_eq!(zero.terms, 1);
        let v = expected_cond_variance(1.0, 10.0).unwrap();
        assert!(v.bound < 1e-10);
        assert!(v.value > 0.0 && v.value < limit_expected_cond_variance());
    }

    #[test]
    fn expected_cond_variance_large_time_uses_cap() {
        let v = expected_cond_variance(1.0, 20.0).unwrap();
        assert_eq!(v.terms, 100_000_000);
        assert!(v.bound <= 1e-6);
        assert!((v.value - limit_expected_cond_variance()).abs() < 1e-3);
        let strict = SeriesOptions { target: 1e-10, max_terms: 1000, accept: 1e-10 };
        assert!(matches!(
            expected_cond_variance_with(1.0, 20.0, strict),
            Err(Error::Accuracy { terms: 1000, .. })
        ));
    }

    #[test]
    fn theory_point_decomposes() {
        let p = theory_point(1.0, 5.0).unwrap();
        assert_eq!(p.total_variance, p.var_cond_expectation + p.expected_cond_variance);
        assert!(p.var_cond_expectation >= 0.0 && p.expected_cond_variance >= 0.0);
        let zero = theory_point(1.3, 0.0).unwrap();
        assert_eq!((zero.total_variance, zero.mean_avg_depth), (0.0, 0.0));
    }

    #[test]
    fn random_leaf_variance_grows_like_two_lambda_t() {
        let a = var_random_leaf_depth(1.0, 9.0).unwrap();
        let b = var_random_leaf_depth(1.0, 10.0).unwrap();
        assert!((b - a - 2.0).abs() < 0.1, "increment {}", b - a);
        assert!(var_random_leaf_depth(1.0, 0.0).unwrap().abs() < 1e-15);
    }
}
