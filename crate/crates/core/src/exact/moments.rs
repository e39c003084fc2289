//! Moments of the depth aggregates along the embedded jump chain.
//!
//! With `a_k = E[G_k]/k = 2 Σ_{i=2}^k 1/i`:
//!
//! ```text
//! E[S_k]   = k (4 Σ_{i=2}^{k-1} a_i/(i+1) + a_k)
//! E[G_k²]  = k (k+1) Σ_{i=1}^{k-1} [ E[S_i]/(i(i+1)(i+2)) + 4/((i+1)(i+2)) + 4 a_i/(i+2) ]
//! ```
//!
//! All inner sums are carried as running partial sums, so producing the
//! first `K` rows costs `O(K)` time and `O(1)` memory.
//!
//! `Var(G_k/k)` is not formed as `E[G_k²]/k² − a_k²`, which cancels two
//! quantities of size `(2 ln k)²`. Instead it uses the rearrangement
//!
//! ```text
//! Var(G_k/k) = (k+1)/k [A + 4B + 4C − 8D − 4 a_k/k] + a_k²/k
//! A = Σ_{i<k} E[S_i]/(i(i+1)(i+2)),  B = Σ_{i<k} 1/((i+1)(i+2)),
//! C = Σ_{i=2}^k 1/i²,                D = Σ_{i<k} a_i/(i(i+2))
//! ```
//!
//! whose terms all stay bounded.

use num::{BigRational, One, Zero};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Exact moments at leaf count `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub k: u64,
    /// E[G_k]
    pub eg: f64,
    /// E[S_k]
    pub es: f64,
    /// E[G_k²]
    pub eg2: f64,
    /// Var(G_k / k)
    pub var_avg: f64,
}

impl Moments {
    /// E[G_k]/k, the conditional mean of the average depth given `Z = k`.
    pub fn mean_avg(&self) -> f64 {
        self.eg / self.k as f64
    }

    /// Var(G_k/k) computed by the direct definition (cancellation-prone).
    pub fn var_avg_direct(&self) -> f64 {
        let k = self.k as f64;
        self.eg2 / (k * k) - self.mean_avg().powi(2)
    }
}

/// Infinite iterator over [`Moments`] for `k = 1, 2, 3, ...`.
#[derive(Debug, Clone)]
pub struct MomentStream {
    k: u64,
    // 2 Σ_{i=2}^{k} 1/i
    avg_g: CompensatedSum,
    // Σ_{i=2}^{k-1} a_i/(i+1)
    s_inner: CompensatedSum,
    // A, B, E = Σ a_i/(i+2) for the E[G²] bracket, all over i < k
    a: CompensatedSum,
    b: CompensatedSum,
    e: CompensatedSum,
    c: CompensatedSum,
    d: CompensatedSum,
}

impl Default for MomentStream {
    fn default() -> Self {
        Self::new()
    }
}

impl MomentStream {
    pub fn new() -> Self {
        MomentStream {
            k: 0,
            avg_g: CompensatedSum::new(),
            s_inner: CompensatedSum::new(),
            a: CompensatedSum::new(),
            b: CompensatedSum::new(),
            e: CompensatedSum::new(),
            c: CompensatedSum::new(),
            d: CompensatedSum::new(),
        }
    }
}

impl Iterator for MomentStream {
    type Item = Moments;

    fn next(&mut self) -> Option<Moments> {
        self.k += 1;
        let k = self.k as f64;
        if self.k >= 2 {
            self.avg_g.add(2.0 / k);
            self.c.add(1.0 / (k * k));
        }
        let avg_g = self.avg_g.value();
        let es_over_k = 4.0 * self.s_inner.value() + avg_g;
        let eg2 = k * (k + 1.0) * (self.a.value() + 4.0 * self.b.value() + 4.0 * self.e.value());
        let bracket = self.a.value() + 4.0 * self.b.value() + 4.0 * self.c.value()
            - 8.0 * self.d.value()
            - 4.0 * avg_g / k;
        // Values below the rounding resolution of the bracket are zero; this
        // only triggers on the deterministic prefix k <= 3.
        let var_avg = (k + 1.0) / k * bracket + avg_g * avg_g / k;
        let resolution = 16.0 * f64::EPSILON * (1.0 + avg_g * avg_g);
        let var_avg = if var_avg < resolution { 0.0 } else { var_avg };

        self.a.add(es_over_k / ((k + 1.0) * (k + 2.0)));
        self.b.add(1.0 / ((k + 1.0) * (k + 2.0)));
        self.e.add(avg_g / (k + 2.0));
        self.s_inner.add(avg_g / (k + 1.0));
        self.d.add(avg_g / (k * (k + 2.0)));

        Some(Moments {
            k: self.k,
            eg: k * avg_g,
            es: k * es_over_k,
            eg2,
            var_avg,
        })
    }
}

/// Moments for every `1 <= k <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    rows: Vec<Moments>,
}

impl MomentTable {
    pub fn new(k_max: u64) -> Result<Self> {
        check_k(k_max)?;
        let rows = MomentStream::new().take(k_max as usize).collect();
        Ok(MomentTable { rows })
    }

    pub fn k_max(&self) -> u64 {
        self.rows.len() as u64
    }

    /// Row for leaf count `k`, if `1 <= k <= k_max`.
    pub fn get(&self, k: u64) -> Option<&Moments> {
        k.checked_sub(1).and_then(|i| self.rows.get(i as usize))
    }

    pub fn rows(&self) -> &[Moments] {
        &self.rows
    }

    pub fn eg(&self, k: u64) -> Option<f64> {
        self.get(k).map(|m| m.eg)
    }

    pub fn es(&self, k: u64) -> Option<f64> {
        self.get(k).map(|m| m.es)
    }

    pub fn eg2(&self, k: u64) -> Option<f64> {
        self.get(k).map(|m| m.eg2)
    }

    pub fn var_avg(&self, k: u64) -> Option<f64> {
        self.get(k).map(|m| m.var_avg)
    }
}

fn check_k(k: u64) -> Result<()> {
    if k < 1 {
        return Err(Error::domain("k", "leaf count must be at least 1"));
    }
    Ok(())
}

fn moments_at(k: u64) -> Result<Moments> {
    check_k(k)?;
    Ok(MomentStream::new().nth(k as usize - 1).expect("stream is infinite"))
}

/// E[G_k]. Costs O(k); use [`MomentTable`] or [`MomentStream`] for many `k`.
pub fn expected_g(k: u64) -> Result<f64> {
    check_k(k)?;
    let h: CompensatedSum = (2..=k).map(|i| 1.0 / i as f64).collect();
    Ok(2.0 * k as f64 * h.value())
}

/// E[S_k]
pub fn expected_s(k: u64) -> Result<f64> {
    moments_at(k).map(|m| m.es)
}

/// E[G_k²]
pub fn expected_g2(k: u64) -> Result<f64> {
    moments_at(k).map(|m| m.eg2)
}

/// Var(G_k / k)
pub fn var_avg_depth(k: u64) -> Result<f64> {
    moments_at(k).map(|m| m.var_avg)
}

/// The same moments in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMoments {
    pub k: u64,
    pub eg: BigRational,
    pub es: BigRational,
    pub eg2: BigRational,
    pub var_avg: BigRational,
}

fn rat(n: u64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Exact rational moments for `k = 1..=k_max`, from the same closed forms.
pub fn rational_moments(k_max: u64) -> Result<Vec<RationalMoments>> {
    check_k(k_max)?;
    let mut out = Vec::with_capacity(k_max as usize);
    let mut avg_g = BigRational::zero();
    let mut s_inner = BigRational::zero();
    let mut bracket = BigRational::zero();
    let four = rat(4);
    for k in 1..=k_max {
        if k >= 2 {
            avg_g += rat(2) / rat(k);
        }
        let kr = rat(k);
        let es_over_k = &four * &s_inner + &avg_g;
        let eg = &kr * &avg_g;
        let eg2 = &kr * rat(k + 1) * &bracket;
        let var_avg = &eg2 / (&kr * &kr) - &avg_g * &avg_g;

        bracket += &es_over_k / (rat(k + 1) * rat(k + 2))
            + &four / (rat(k + 1) * rat(k + 2))
            + &four * &avg_g / rat(k + 2);
        s_inner += &avg_g / rat(k + 1);

        out.push(RationalMoments {
            k,
            eg,
            es: &kr * es_over_k,
            eg2,
            var_avg,
        });
    }
    Ok(out)
}

impl RationalMoments {
    /// Moments of a distribution over trees with `k` leaves.
    pub(crate) fn from_weighted<'a, I>(k: u64, items: I) -> Self
    where
        I: IntoIterator<Item = ((u64, u64), &'a BigRational)>,
    {
        let mut eg = BigRational::zero();
        let mut es = BigRational::zero();
        let mut eg2 = BigRational::zero();
        let mut mass = BigRational::zero();
        for ((g, s), p) in items {
            eg += rat(g) * p;
            es += rat(s) * p;
            eg2 += rat(g) * rat(g) * p;
            mass += p;
        }
        debug_assert!(mass.is_one());
        let kr = rat(k);
        let var_avg = &eg2 / (&kr * &kr) - (&eg / &kr) * (&eg / &kr);
        RationalMoments { k, eg, es, eg2, var_avg }
    }
}
