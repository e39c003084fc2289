//! Pure-birth tree simulation.
//!
//! A tree is tracked only through its multiset of leaf depths. Splitting a
//! leaf of depth `d` removes it and adds two leaves of depth `d + 1`, so the
//! aggregates change by `Δz = 1`, `Δg = d + 2` and `Δs = d² + 4d + 2`.
//! The embedded jump chain (indexed by leaf count) picks the splitting leaf
//! uniformly; the continuous-time process additionally waits an
//! `Exp(λ·z)` holding time between splits.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

pub const DEFAULT_MAX_LEAVES: u64 = 10_000_000;

/// Leaf-depth histogram with cached leaf count, depth sum and squared-depth sum.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeState {
    // counts[d] = number of leaves at depth d; zero entries below `lo` and
    // in gaps are never reported.
    counts: Vec<u64>,
    lo: usize,
    z: u64,
    g: u64,
    s: u64,
}

impl Default for TreeState {
    fn default() -> Self {
        Self::new()
    }
}

impl TreeState {
    /// The root, a single leaf at depth 0.
    pub fn new() -> Self {
        TreeState {
            counts: vec![1],
            lo: 0,
            z: 1,
            g: 0,
            s: 0,
        }
    }

    /// Build a state from `(depth, count)` pairs. Zero counts are dropped;
    /// repeated depths are merged. Returns `None` for an empty multiset.
    pub fn from_depth_counts<I>(pairs: I) -> Option<Self>
    where
        I: IntoIterator<Item = (u32, u64)>,
    {
        let mut counts = Vec::new();
        for (d, c) in pairs {
            let d = d as usize;
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] += c;
        }
        while counts.last() == Some(&0) {
            counts.pop();
        }
        let lo = counts.iter().position(|&c| c > 0)?;
        let (z, g, s) = recount(&counts);
        Some(TreeState { counts, lo, z, g, s })
    }

    pub fn leaves(&self) -> u64 {
        self.z
    }

    pub fn depth_sum(&self) -> u64 {
        self.g
    }

    pub fn depth_square_sum(&self) -> u64 {
        self.s
    }

    pub fn avg_depth(&self) -> f64 {
        self.g as f64 / self.z as f64
    }

    pub fn max_depth(&self) -> u32 {
        (self.counts.len() - 1) as u32
    }

    /// Occupied depths in increasing order, with their leaf counts.
    pub fn depth_counts(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .skip(self.lo)
            .filter(|(_, &c)| c > 0)
            .map(|(d, &c)| (d as u32, c))
    }

    /// Recount z, g, s from the histogram and compare with the cache.
    pub fn is_coherent(&self) -> bool {
        recount(&self.counts) == (self.z, self.g, self.s)
            && self.z >= 1
            && self.counts[..self.lo].iter().all(|&c| c == 0)
            && self.counts.get(self.lo).is_some_and(|&c| c > 0)
            && self.counts.last().is_some_and(|&c| c > 0)
    }

    /// Split the leaf sitting at `depth`. Panics if no leaf has that depth
    /// or if the aggregates overflow.
    pub fn split_at(&mut self, depth: u32) {
        let d = depth as usize;
        assert!(
            self.counts.get(d).is_some_and(|&c| c > 0),
            "no leaf at depth {depth}"
        );
        self.counts[d] -= 1;
        if d + 1 == self.counts.len() {
            self.counts.push(0);
        }
        self.counts[d + 1] += 2;
        while self.counts[self.lo] == 0 {
            self.lo += 1;
        }
        let d = depth as u64;
        self.z = self.z.checked_add(1).expect("leaf count overflow");
        self.g = self.g.checked_add(d + 2).expect("depth sum overflow");
        self.s = d
            .checked_mul(d + 4)
            .and_then(|x| x.checked_add(2))
            .and_then(|x| self.s.checked_add(x))
            .expect("squared depth sum overflow");
    }

    /// Depth of the leaf with rank `u` (0-based) when leaves are ordered by depth.
    fn depth_of_rank(&self, mut u: u64) -> u32 {
        debug_assert!(u < self.z);
        for (d, &c) in self.counts.iter().enumerate().skip(self.lo) {
            if u < c {
                return d as u32;
            }
            u -= c;
        }
        unreachable!("rank beyond leaf count")
    }
}

fn recount(counts: &[u64]) -> (u64, u64, u64) {
    counts.iter().enumerate().fold((0, 0, 0), |(z, g, s), (d, &c)| {
        let d = d as u64;
        (z + c, g + d * c, s + d * d * c)
    })
}

/// A fresh single-leaf tree.
pub fn new_tree() -> TreeState {
    TreeState::new()
}

/// Depth of a uniformly chosen leaf.
pub fn sample_random_leaf_depth<R: Rng + ?Sized>(state: &TreeState, rng: &mut R) -> u32 {
    state.depth_of_rank(rng.random_range(0..state.z))
}

/// One jump of the embedded chain: split a uniformly chosen leaf.
/// Returns the depth of the leaf that split.
pub fn step<R: Rng + ?Sized>(state: &mut TreeState, rng: &mut R) -> u32 {
    debug_assert!(state.is_coherent());
    let d = sample_random_leaf_depth(state, rng);
    state.split_at(d);
    d
}

/// Stopping rule for a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Observe the continuous-time process at this time.
    Time(f64),
    /// Run the jump chain until the tree has this many leaves.
    Leaves(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub lambda: f64,
    pub horizon: Horizon,
    pub seed: u64,
    pub replicate_index: u64,
    pub max_leaves: u64,
}

impl SimConfig {
    pub fn continuous(lambda: f64, t_end: f64) -> Result<Self> {
        Self {
            lambda,
            horizon: Horizon::Time(t_end),
            seed: rng::DEFAULT_SEED,
            replicate_index: 0,
            max_leaves: DEFAULT_MAX_LEAVES,
        }
        .validated()
    }

    pub fn discrete(k_target: u64) -> Result<Self> {
        Self {
            lambda: 1.0,
            horizon: Horizon::Leaves(k_target),
            seed: rng::DEFAULT_SEED,
            replicate_index: 0,
            max_leaves: DEFAULT_MAX_LEAVES,
        }
        .validated()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicate(mut self, replicate_index: u64) -> Self {
        self.replicate_index = replicate_index;
        self
    }

    pub fn with_max_leaves(mut self, max_leaves: u64) -> Self {
        self.max_leaves = max_leaves;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain("lambda", format!("must be finite and > 0, got {}", self.lambda)));
        }
        if self.max_leaves < 1 {
            return Err(Error::domain("max_leaves", "must be at least 1"));
        }
        match self.horizon {
            Horizon::Time(t) if !(t >= 0.0 && t.is_finite()) => {
                Err(Error::domain("t_end", format!("must be finite and >= 0, got {t}")))
            }
            Horizon::Leaves(0) => Err(Error::domain("k_target", "must be at least 1")),
            _ => Ok(self),
        }
    }

    /// The random stream owned by this replicate.
    pub fn rng(&self) -> StreamRng {
        rng::stream(self.seed, rng::SIMULATION, self.replicate_index)
    }
}

/// One replicate observed at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    pub t_end: f64,
    pub z: u64,
    pub g: u64,
    pub s: u64,
    pub avg_depth: f64,
    /// Depth of one uniformly chosen leaf of this tree.
    pub random_leaf_depth: u32,
}

impl SimOutcome {
    fn observe<R: Rng + ?Sized>(state: &TreeState, t_end: f64, rng: &mut R) -> Self {
        SimOutcome {
            t_end,
            z: state.leaves(),
            g: state.depth_sum(),
            s: state.depth_square_sum(),
            avg_depth: state.avg_depth(),
            random_leaf_depth: sample_random_leaf_depth(state, rng),
        }
    }
}

/// Run the jump chain until `z = k_target`.
pub fn run_discrete(config: &SimConfig) -> Result<TreeState> {
    grow_to_target(config).map(|(state, _)| state)
}

/// [`run_discrete`], then draw one leaf depth from the same stream.
/// `t_end` is NaN: the jump chain carries no clock.
pub fn run_discrete_outcome(config: &SimConfig) -> Result<SimOutcome> {
    let (state, mut rng) = grow_to_target(config)?;
    Ok(SimOutcome::observe(&state, f64::NAN, &mut rng))
}

fn grow_to_target(config: &SimConfig) -> Result<(TreeState, StreamRng)> {
    let config = config.validated()?;
    let Horizon::Leaves(k_target) = config.horizon else {
        return Err(Error::domain("horizon", "run_discrete needs a leaf-count target"));
    };
    if k_target > config.max_leaves {
        return Err(Error::Capacity {
            max_leaves: config.max_leaves,
            leaves: k_target,
            time_reached: f64::NAN,
        });
    }
    let mut rng = config.rng();
    let mut state = TreeState::new();
    while state.leaves() < k_target {
        step(&mut state, &mut rng);
    }
    Ok((state, rng))
}

/// Run the continuous-time process to `t_end` and observe it there.
pub fn run_continuous(config: &SimConfig) -> Result<SimOutcome> {
    let config = config.validated()?;
    let Horizon::Time(t_end) = config.horizon else {
        return Err(Error::domain("horizon", "run_continuous needs an end time"));
    };
    Ok(run_observed(&config, &[t_end])?.remove(0))
}

/// Follow one sample path and observe it at each of `times` (non-decreasing).
///
/// The holding time that straddles an observation is not executed before
/// the observation is taken. A leaf depth is drawn at every observation, so
/// `run_observed(c, &[t])` and `run_continuous` agree draw for draw.
pub fn run_observed(config: &SimConfig, times: &[f64]) -> Result<Vec<SimOutcome>> {
    let config = config.validated()?;
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::domain("times", "observation times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("times", "observation times must be non-decreasing"));
    }
    let mut rng = config.rng();
    let mut state = TreeState::new();
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut pending = times.iter().copied().peekable();
    while pending.peek().is_some() {
        let rate = config.lambda * state.leaves() as f64;
        let wait: f64 = rng.sample::<f64, _>(Exp1) / rate;
        let next = now + wait;
        while let Some(&t) = pending.peek() {
            if next <= t {
                break;
            }
            out.push(SimOutcome::observe(&state, t, &mut rng));
            pending.next();
        }
        if pending.peek().is_none() {
            break;
        }
        now = next;
        step(&mut state, &mut rng);
        if state.leaves() > config.max_leaves {
            return Err(Error::Capacity {
                max_leaves: config.max_leaves,
                leaves: state.leaves(),
                time_reached: now,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tree(pairs: &[(u32, u64)]) -> TreeState {
        TreeState::from_depth_counts(pairs.iter().copied()).unwrap()
    }

    fn hist(state: &TreeState) -> Vec<(u32, u64)> {
        state.depth_counts().collect()
    }

    #[test]
    fn root_state() {
        let t = new_tree();
        assert_eq!(hist(&t), vec![(0, 1)]);
        assert_eq!((t.leaves(), t.depth_sum(), t.depth_square_sum()), (1, 0, 0));
        assert_eq!(t.avg_depth(), 0.0);
    }

    #[test]
    fn first_two_steps_are_forced() {
        let mut rng = StreamRng::seed_from_u64(3);
        let mut t = new_tree();
        assert_eq!(step(&mut t, &mut rng), 0);
        assert_eq!(hist(&t), vec![(1, 2)]);
        assert_eq!((t.leaves(), t.depth_sum(), t.depth_square_sum()), (2, 2, 2));
        step(&mut t, &mut rng);
        assert_eq!(hist(&t), vec![(1, 1), (2, 2)]);
        assert_eq!((t.leaves(), t.depth_sum(), t.depth_square_sum()), (3, 5, 9));
    }

    #[test]
    fn third_step_branches_one_third_two_thirds() {
        let start = tree(&[(1, 1), (2, 2)]);
        let mut rng = StreamRng::seed_from_u64(11);
        let n = 60_000;
        let mut shallow = 0;
        for _ in 0..n {
            let mut t = start.clone();
            match step(&mut t, &mut rng) {
                1 => {
                    assert_eq!(hist(&t), vec![(2, 4)]);
                    assert_eq!(t.depth_sum(), 8);
                    shallow += 1;
                }
                2 => {
                    assert_eq!(hist(&t), vec![(1, 1), (2, 1), (3, 2)]);
                    assert_eq!(t.depth_sum(), 9);
                }
                d => panic!("impossible split depth {d}"),
            }
        }
        let p = shallow as f64 / n as f64;
        // binomial sd at n = 6e4 is ~0.0019
        assert!((p - 1.0 / 3.0).abs() < 0.01, "p = {p}");
    }

    #[test]
    fn leaf_sampling_is_uniform_over_leaves() {
        let t = tree(&[(1, 1), (2, 2)]);
        let mut rng = StreamRng::seed_from_u64(5);
        let n = 60_000;
        let ones = (0..n).filter(|_| sample_random_leaf_depth(&t, &mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        assert_eq!(sample_random_leaf_depth(&new_tree(), &mut rng), 0);
    }

    #[test]
    fn gaps_in_depths_are_skipped() {
        let t = tree(&[(1, 1), (3, 4), (2, 0)]);
        assert_eq!(hist(&t), vec![(1, 1), (3, 4)]);
        assert!(t.is_coherent());
        assert_eq!(t.max_depth(), 3);
        assert!(TreeState::from_depth_counts([(2u32, 0u64)]).is_none());
    }

    #[test]
    fn discrete_runs() {
        let s = run_discrete(&SimConfig::discrete(1).unwrap()).unwrap();
        assert_eq!(s, new_tree());
        for rep in 0..20 {
            let s = run_discrete(&SimConfig::discrete(3).unwrap().with_replicate(rep)).unwrap();
            assert_eq!((s.leaves(), s.depth_sum(), s.depth_square_sum()), (3, 5, 9));
        }
        let s = run_discrete(&SimConfig::discrete(500).unwrap()).unwrap();
        assert_eq!(s.leaves(), 500);
        assert!(s.is_coherent());
    }

    #[test]
    fn discrete_capacity() {
        let c = SimConfig::discrete(50).unwrap().with_max_leaves(10);
        assert!(matches!(run_discrete(&c), Err(Error::Capacity { .. })));
    }

    #[test]
    fn continuous_at_time_zero() {
        let o = run_continuous(&SimConfig::continuous(1.0, 0.0).unwrap()).unwrap();
        assert_eq!((o.z, o.g, o.s, o.random_leaf_depth), (1, 0, 0, 0));
        assert_eq!(o.avg_depth, 0.0);
    }

    #[test]
    fn continuous_capacity_reports_time() {
        let c = SimConfig::continuous(1.0, 30.0).unwrap().with_max_leaves(1000);
        match run_continuous(&c) {
            Err(Error::Capacity { leaves, time_reached, .. }) => {
                assert_eq!(leaves, 1001);
                assert!(time_reached > 0.0 && time_reached < 30.0);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::continuous(0.0, 1.0).is_err());
        assert!(SimConfig::continuous(1.0, -1.0).is_err());
        assert!(SimConfig::continuous(f64::NAN, 1.0).is_err());
        assert!(SimConfig::discrete(0).is_err());
        let c = SimConfig::continuous(1.0, 1.0).unwrap();
        assert!(run_discrete(&c).is_err());
        assert!(run_observed(&c, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn observed_path_matches_single_observation() {
        let c = SimConfig::continuous(1.0, 4.0).unwrap().with_seed(9).with_replicate(4);
        let a = run_continuous(&c).unwrap();
        let b = run_observed(&c, &[4.0]).unwrap();
        assert_eq!(vec![a], b);
        let path = run_observed(&c, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(path.windows(2).all(|w| w[0].z <= w[1].z));
        assert_eq!(path[3].t_end, 4.0);
    }
}
