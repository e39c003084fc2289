//! Exact distribution of the leaf-depth multiset after `k − 1` jumps.
//!
//! Dynamic program over canonical multisets: from a multiset with `j`
//! leaves, each occupied depth `d` splits with probability `count_d / j`.
//! Identical successors are merged, and probabilities are kept as exact
//! rationals.

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};

use super::moments::RationalMoments;
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 8;

/// Sorted `(depth, count)` pairs with every count positive.
pub type Multiset = Vec<(u32, u32)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthDistribution {
    pub k: usize,
    pub entries: BTreeMap<Multiset, BigRational>,
}

impl DepthDistribution {
    pub fn total_probability(&self) -> BigRational {
        self.entries.values().fold(BigRational::zero(), |acc, p| acc + p)
    }

    /// Probability of the multiset given as a list of leaf depths in any order.
    pub fn probability_of(&self, depths: &[u32]) -> BigRational {
        self.entries
            .get(&canonical(depths))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn moments(&self) -> RationalMoments {
        let k = self.k as u64;
        let keyed: Vec<((u64, u64), &BigRational)> =
            self.entries.iter().map(|(m, p)| (aggregates(m), p)).collect();
        RationalMoments::from_weighted(k, keyed)
    }
}

/// Canonical multiset from unsorted leaf depths.
pub fn canonical(depths: &[u32]) -> Multiset {
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    let mut out: Multiset = Vec::new();
    for d in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == d => *c += 1,
            _ => out.push((d, 1)),
        }
    }
    out
}

fn aggregates(m: &Multiset) -> (u64, u64) {
    m.iter().fold((0, 0), |(g, s), &(d, c)| {
        let (d, c) = (d as u64, c as u64);
        (g + d * c, s + d * d * c)
    })
}

fn split(m: &Multiset, at: usize) -> Multiset {
    let (d, _) = m[at];
    let mut out = m.clone();
    out[at].1 -= 1;
    match out.iter().position(|&(e, _)| e == d + 1) {
        Some(i) => out[i].1 += 2,
        None => out.insert(at + 1, (d + 1, 2)),
    }
    if out[at].1 == 0 {
        out.remove(at);
    }
    out
}

pub fn enumerate_distribution(k: usize) -> Result<DepthDistribution> {
    enumerate_distribution_with_cap(k, DEFAULT_ENUMERATION_CAP)
}

/// Like [`enumerate_distribution`] with a custom cap on `k`. The number of
/// reachable multisets grows quickly; caps beyond ~14 need a lot of memory.
pub fn enumerate_distribution_with_cap(k: usize, cap: usize) -> Result<DepthDistribution> {
    if k < 1 {
        return Err(Error::domain("k", "leaf count must be at least 1"));
    }
    if k > cap {
        return Err(Error::EnumerationCap { k, cap });
    }
    let mut layer: BTreeMap<Multiset, BigRational> = BTreeMap::new();
    layer.insert(vec![(0, 1)], BigRational::one());
    for leaves in 1..k {
        let denom = BigRational::from_integer(leaves.into());
        let mut next = BTreeMap::new();
        for (m, p) in &layer {
            for (i, &(_, c)) in m.iter().enumerate() {
                let w = p * BigRational::from_integer(c.into()) / &denom;
                *next.entry(split(m, i)).or_insert_with(BigRational::zero) += w;
            }
        }
        layer = next;
    }
    Ok(DepthDistribution { k, entries: layer })
}
