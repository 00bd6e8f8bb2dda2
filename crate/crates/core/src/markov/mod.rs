//! Homogeneous and piecewise-homogeneous Markov jump processes and their
//! uniformized (marked Poisson) representation.

mod intensity;
mod path;
mod regime;

pub use intensity::{uniformize, IntensityMatrix, SkeletonMatrix};
pub use path::{collapse, MarkedPath, PathView, SamplePath};
pub use regime::{LambdaPolicy, RegimePartition};

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::scalar::{ln0, uniform_open, Real};

/// Checks that `dist` is a probability vector over `size` states.
pub fn validate_distribution<T: Real>(dist: &[T], size: usize) -> Result<()> {
    if dist.len() != size {
        return Err(Error::InvalidDistribution(format!(
            "expected {size} entries, got {}",
            dist.len()
        )));
    }
    if let Some(p) = dist.iter().find(|&&p| !(p >= T::zero()) || !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "entry {p} is negative or not finite"
        )));
    }
    let total: f64 = dist.iter().map(|p| p.as_f64()).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Draws an index with probability proportional to `weights`.
///
/// Returns `None` when every weight is zero.
pub fn sample_index<T: Real, R: Rng + ?Sized>(rng: &mut R, weights: &[T]) -> Option<usize> {
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return None;
    }
    let u = T::lit(rng.random::<f64>()) * total;
    let mut acc = T::zero();
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > T::zero() {
            acc += w;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Draw from a Poisson distribution; zero mean gives zero.
pub(crate) fn sample_poisson_count<T: Real, R: Rng + ?Sized>(rng: &mut R, mean: T) -> usize {
    let mean = mean.as_f64();
    if !(mean > 0.0) {
        return 0;
    }
    let draw: f64 = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng);
    draw as usize
}

/// `count` sorted, pairwise distinct uniforms strictly inside `(lo, hi)`.
///
/// Colliding draws are redrawn until all values are distinct.
pub(crate) fn sorted_uniforms<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    lo: T,
    hi: T,
) -> Vec<T> {
    let mut times: Vec<T> = (0..count).map(|_| uniform_open(rng, lo, hi)).collect();
    loop {
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut clash = false;
        for k in 1..times.len() {
            if times[k] == times[k - 1] {
                times[k] = uniform_open(rng, lo, hi);
                clash = true;
            }
        }
        if !clash {
            return times;
        }
    }
}

/// Points of a homogeneous Poisson process with rate `lambda` on
/// `(t_min, t_max)`, in increasing order.
pub fn sample_poisson_times<T: Real, R: Rng + ?Sized>(
    lambda: T,
    t_min: T,
    t_max: T,
    rng: &mut R,
) -> Vec<T> {
    let count = sample_poisson_count(rng, lambda * (t_max - t_min));
    sorted_uniforms(rng, count, t_min, t_max)
}

/// Samples a trajectory of the process with intensity `q` and initial law
/// `initial` by uniformization at rate `lambda`.
pub fn sample_marked_path<T: Real, R: Rng + ?Sized>(
    q: &IntensityMatrix<T>,
    lambda: T,
    initial: &[T],
    t_min: T,
    t_max: T,
    rng: &mut R,
) -> Result<MarkedPath<T>> {
    let regimes = RegimePartition::single(Arc::new(q.clone()), lambda, t_min, t_max)?;
    sample_piecewise(&regimes, initial, rng)
}

/// Samples a trajectory of a piecewise-homogeneous process by uniformization.
pub fn sample_piecewise<T: Real, R: Rng + ?Sized>(
    regimes: &RegimePartition<T>,
    initial: &[T],
    rng: &mut R,
) -> Result<MarkedPath<T>> {
    validate_distribution(initial, regimes.size())?;
    let mut times = Vec::new();
    for j in 0..regimes.count() {
        let (lo, hi) = regimes.bounds(j);
        times.extend(sample_poisson_times(regimes.lambda(j), lo, hi, rng));
    }
    let x0 = sample_index(rng, initial).expect("validated distribution");
    let mut states = Vec::with_capacity(times.len() + 1);
    states.push(x0);
    let mut weights = vec![T::zero(); regimes.size()];
    for &t in &times {
        let j = regimes.regime_at(t);
        let prev = *states.last().unwrap();
        weights.iter_mut().for_each(|w| *w = T::zero());
        weights[prev] = regimes.stay(j, prev);
        for &(to, rate) in regimes.intensity(j).row(prev) {
            weights[to] = rate / regimes.lambda(j);
        }
        states.push(sample_index(rng, &weights).expect("skeleton row has mass"));
    }
    let (t_min, t_max) = regimes.interval();
    MarkedPath::new(t_min, t_max, times, states)
}

/// `n log(lambda) + log nu(x_0) + sum_i log P(x_(i-1), x_i)`, the density of
/// a marked path with the reference-measure constant dropped.
pub fn log_density_marked<T: Real>(
    path: &MarkedPath<T>,
    skeleton: &SkeletonMatrix<T>,
    initial: &[T],
) -> T {
    let states = path.states();
    let mut total = ln0(initial[states[0]]);
    if !path.is_empty() {
        total += T::from_count(path.len()) * ln0(skeleton.lambda());
    }
    for w in states.windows(2) {
        total += ln0(skeleton.prob(w[0], w[1]));
    }
    total
}

/// Piecewise analogue of [`log_density_marked`]: each point contributes
/// `log(lambda_j) + log P_j(x_(i-1), x_i)` for the regime `j` containing it.
pub fn log_density_marked_piecewise<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    initial: &[T],
) -> T {
    let states = path.states();
    let mut total = ln0(initial[states[0]]);
    for (k, &t) in path.times().iter().enumerate() {
        let j = regimes.regime_at(t);
        total += ln0(regimes.lambda(j)) + ln0(regimes.prob(j, states[k], states[k + 1]));
    }
    total
}

/// Jump counts by `(from, to)` and holding times by state.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStatistics<T> {
    size: usize,
    counts: Vec<u64>,
    holding: Vec<T>,
}

impl<T: Real> PathStatistics<T> {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            counts: vec![0; size * size],
            holding: vec![T::zero(); size],
        }
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.size + to]
    }

    pub fn holding(&self, state: usize) -> T {
        self.holding[state]
    }

    pub fn total_jumps(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_holding(&self) -> T {
        self.holding.iter().copied().sum()
    }

    pub(crate) fn add_jump(&mut self, from: usize, to: usize) {
        self.counts[from * self.size + to] += 1;
    }

    pub(crate) fn add_holding(&mut self, state: usize, dt: T) {
        self.holding[state] += dt;
    }

    /// `sum n(a, a') log Q(a, a') - sum Q(a) t(a)`.
    pub fn log_likelihood(&self, q: &IntensityMatrix<T>) -> T {
        let mut total = T::zero();
        for a in 0..self.size {
            if self.holding[a] > T::zero() {
                total -= q.total_rate(a) * self.holding[a];
            }
            for b in 0..self.size {
                let n = self.count(a, b);
                if n > 0 {
                    total += T::from_count(n as usize) * ln0(q.rate(a, b));
                }
            }
        }
        total
    }
}

/// Per-regime jump counts and holding times of `path`.
pub fn path_statistics<T: Real>(
    path: &SamplePath<T>,
    regimes: &RegimePartition<T>,
) -> Vec<PathStatistics<T>> {
    let size = regimes.size();
    let mut stats = vec![PathStatistics::zeros(size); regimes.count()];
    let (_, t_max) = path.interval();
    let mut state = path.initial_state();
    let mut jumps = path.jumps().peekable();
    for (j, stat) in stats.iter_mut().enumerate() {
        let (lo, hi) = regimes.bounds(j);
        let mut cur = lo;
        while let Some(&(t, next)) = jumps.peek() {
            if t >= hi && j + 1 < regimes.count() {
                break;
            }
            stat.add_holding(state, t - cur);
            stat.add_jump(state, next);
            state = next;
            cur = t;
            jumps.next();
        }
        let end = if j + 1 == regimes.count() { t_max } else { hi };
        stat.add_holding(state, end - cur);
    }
    stats
}

/// Log density of an actual sample path under a homogeneous process, with
/// the virtual jumps integrated out and the constant reference factor
/// dropped: `log nu(x_0) + sum log Q(a, a') - integral Q(x(t)) dt`.
pub fn log_density_path<T: Real>(path: &SamplePath<T>, q: &IntensityMatrix<T>, initial: &[T]) -> T {
    let (t_min, t_max) = path.interval();
    let mut stats = PathStatistics::zeros(q.size());
    let mut cur = t_min;
    let mut state = path.initial_state();
    for (t, next) in path.jumps() {
        stats.add_holding(state, t - cur);
        stats.add_jump(state, next);
        state = next;
        cur = t;
    }
    stats.add_holding(state, t_max - cur);
    ln0(initial[path.initial_state()]) + stats.log_likelihood(q)
}

/// Draws the virtual points of a sample path from their conditional law
/// under uniformization: on every stretch where the regime is `j` and the
/// state is `a`, virtual points form a Poisson process of rate
/// `lambda_j - Q_j(a)`.
pub fn lift_path<T: Real, R: Rng + ?Sized>(
    path: &SamplePath<T>,
    regimes: &RegimePartition<T>,
    rng: &mut R,
) -> MarkedPath<T> {
    let (t_min, t_max) = path.interval();
    let mut times = Vec::with_capacity(path.jump_count() * 2);
    let mut states = Vec::with_capacity(path.jump_count() * 2 + 1);
    states.push(path.initial_state());
    let fill = |lo: T, hi: T, state: usize, rng: &mut R, times: &mut Vec<T>, states: &mut Vec<usize>| {
        let j = regimes.regime_at(lo);
        let rate = (regimes.lambda(j) - regimes.intensity(j).total_rate(state)).max(T::zero());
        let count = sample_poisson_count(rng, rate * (hi - lo));
        for t in sorted_uniforms(rng, count, lo, hi) {
            times.push(t);
            states.push(state);
        }
    };
    let mut cur = t_min;
    let mut state = path.initial_state();
    let mut breaks = regimes.breakpoints().iter().copied().peekable();
    for (t, next) in path.jumps() {
        while let Some(&r) = breaks.peek() {
            if r >= t {
                break;
            }
            fill(cur, r, state, rng, &mut times, &mut states);
            cur = r;
            breaks.next();
        }
        fill(cur, t, state, rng, &mut times, &mut states);
        times.push(t);
        states.push(next);
        state = next;
        cur = t;
    }
    for r in breaks {
        fill(cur, r, state, rng, &mut times, &mut states);
        cur = r;
    }
    fill(cur, t_max, state, rng, &mut times, &mut states);
    MarkedPath::new(t_min, t_max, times, states).expect("lifted path is ordered")
}

/// Superposes extra virtual points at rate `extra_rate`, as when the
/// uniformization rate is raised from `lambda` to `lambda + extra_rate`.
pub fn pad_virtual<T: Real, R: Rng + ?Sized>(
    path: &MarkedPath<T>,
    extra_rate: T,
    rng: &mut R,
) -> MarkedPath<T> {
    let (t_min, t_max) = path.interval();
    let mut out = path.clone();
    for t in sample_poisson_times(extra_rate, t_min, t_max, rng) {
        if out.has_time(t) {
            continue;
        }
        let x = out.state_at(t);
        out.insert(t, x);
    }
    out
}
