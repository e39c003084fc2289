//! Closed forms, recurrences and limits for the depth statistics, plus an
//! exact enumeration oracle for small trees.

mod enumerate;
mod finite_t;
mod moments;

use std::f64::consts::PI;

pub use enumerate::{
    canonical, enumerate_distribution, enumerate_distribution_with_cap, DepthDistribution, Multiset,
    DEFAULT_ENUMERATION_CAP,
};
pub use finite_t::{
    dilog, expected_cond_variance, expected_cond_variance_with, mean_avg_depth, mean_harmonic_sum,
    theory_point, var_cond_expectation, var_random_leaf_depth, z_pmf, SeriesOptions, SeriesValue,
    TheoryPoint,
};
pub use moments::{
    expected_g, expected_g2, expected_s, rational_moments, var_avg_depth, MomentStream, MomentTable,
    Moments, RationalMoments,
};

/// `lim_k Var(G_k/k) = 7 − 2π²/3`, the large-time limit of `E[Var(G/Z | Z)]`.
pub fn limit_expected_cond_variance() -> f64 {
    7.0 - 2.0 * PI * PI / 3.0
}

/// `lim_t Var(E[G/Z | Z]) = 2π²/3`.
pub fn limit_var_cond_expectation() -> f64 {
    2.0 * PI * PI / 3.0
}

/// `lim_t Var(G(t)/Z(t))`, the sum of the two limits above.
pub fn limit_total_variance() -> f64 {
    limit_expected_cond_variance() + limit_var_cond_expectation()
}
