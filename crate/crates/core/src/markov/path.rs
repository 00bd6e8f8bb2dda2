use crate::error::{Error, Result};
use crate::scalar::Real;

/// Read access to a piecewise-constant, right-continuous trajectory.
pub trait PathView<T> {
    fn t_min(&self) -> T;
    fn t_max(&self) -> T;
    /// State in force at time `t`.
    fn state_at(&self, t: T) -> usize;
    /// Appends the real jumps `(time, new_state)` with `lo < time <= hi`.
    fn jumps_between(&self, lo: T, hi: T, out: &mut Vec<(T, usize)>);
}

fn check_times<T: Real>(t_min: T, t_max: T, times: &[T]) -> Result<()> {
    if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
        return Err(Error::InvalidPath(format!(
            "interval [{t_min}, {t_max}] is empty or not finite"
        )));
    }
    let mut prev = t_min;
    for (i, &t) in times.iter().enumerate() {
        if !(t > prev) {
            return Err(Error::InvalidPath(format!(
                "time {t} at position {i} does not exceed its predecessor {prev}"
            )));
        }
        prev = t;
    }
    if !(prev < t_max) && !times.is_empty() {
        return Err(Error::InvalidPath(format!(
            "last time {prev} is not below t_max = {t_max}"
        )));
    }
    Ok(())
}

/// Redundant (uniformized) representation of a trajectory: potential jump
/// times with the skeleton state entered at each of them.
///
/// `states[0]` holds on `[t_min, times[0])` and `states[i]` from `times[i - 1]`
/// on. Consecutive equal states are virtual jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPath<T> {
    t_min: T,
    t_max: T,
    times: Vec<T>,
    states: Vec<usize>,
}

impl<T: Real> MarkedPath<T> {
    pub fn new(t_min: T, t_max: T, times: Vec<T>, states: Vec<usize>) -> Result<Self> {
        check_times(t_min, t_max, &times)?;
        if states.len() != times.len() + 1 {
            return Err(Error::InvalidPath(format!(
                "{} times need {} states, got {}",
                times.len(),
                times.len() + 1,
                states.len()
            )));
        }
        Ok(Self {
            t_min,
            t_max,
            times,
            states,
        })
    }

    pub fn constant(t_min: T, t_max: T, state: usize) -> Self {
        Self {
            t_min,
            t_max,
            times: Vec::new(),
            states: vec![state],
        }
    }

    /// Number of marked points `n`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn interval(&self) -> (T, T) {
        (self.t_min, self.t_max)
    }

    pub fn duration(&self) -> T {
        self.t_max - self.t_min
    }

    /// Time of point `i` counting the interval ends as `0` and `n + 1`.
    pub fn anchor(&self, i: usize) -> T {
        if i == 0 {
            self.t_min
        } else if i > self.len() {
            self.t_max
        } else {
            self.times[i - 1]
        }
    }

    /// Number of points with time `<= t`; the index of the state in force.
    pub fn index_at(&self, t: T) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// True when `t` coincides with one of the marked times.
    pub fn has_time(&self, t: T) -> bool {
        self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()).is_ok()
    }

    /// Inserts a point at `t`; returns its one-based index in the new path.
    pub(crate) fn insert(&mut self, t: T, state: usize) -> usize {
        let k = self.index_at(t);
        debug_assert!(k == 0 || self.times[k - 1] < t);
        self.times.insert(k, t);
        self.states.insert(k + 1, state);
        k + 1
    }

    /// Removes the point with one-based index `i`.
    pub(crate) fn remove(&mut self, i: usize) -> (T, usize) {
        let t = self.times.remove(i - 1);
        let x = self.states.remove(i);
        (t, x)
    }

    pub(crate) fn set_state(&mut self, i: usize, x: usize) {
        self.states[i] = x;
    }

    pub(crate) fn set_time(&mut self, i: usize, t: T) {
        self.times[i - 1] = t;
    }

    pub(crate) fn set_times(&mut self, times: Vec<T>) {
        debug_assert_eq!(times.len(), self.times.len());
        self.times = times;
    }

    /// One-based indices `i` with `x_(i-1) == x_i`.
    pub fn virtual_indices(&self) -> Vec<usize> {
        (1..=self.len())
            .filter(|&i| self.states[i - 1] == self.states[i])
            .collect()
    }

    pub fn virtual_count(&self) -> usize {
        (1..=self.len())
            .filter(|&i| self.states[i - 1] == self.states[i])
            .count()
    }

    /// Drops every virtual point.
    pub fn collapse(&self) -> SamplePath<T> {
        let mut jump_times = Vec::new();
        let mut jump_states = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            if self.states[i + 1] != self.states[i] {
                jump_times.push(t);
                jump_states.push(self.states[i + 1]);
            }
        }
        SamplePath {
            t_min: self.t_min,
            t_max: self.t_max,
            initial_state: self.states[0],
            jump_times,
            jump_states,
        }
    }
}

impl<T: Real> PathView<T> for MarkedPath<T> {
    fn t_min(&self) -> T {
        self.t_min
    }

    fn t_max(&self) -> T {
        self.t_max
    }

    fn state_at(&self, t: T) -> usize {
        self.states[self.index_at(t)]
    }

    fn jumps_between(&self, lo: T, hi: T, out: &mut Vec<(T, usize)>) {
        let start = self.times.partition_point(|&s| s <= lo);
        for k in start..self.times.len() {
            let t = self.times[k];
            if t > hi {
                break;
            }
            if self.states[k + 1] != self.states[k] {
                out.push((t, self.states[k + 1]));
            }
        }
    }
}

/// An actual sample path: initial state plus real jumps only.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    t_min: T,
    t_max: T,
    initial_state: usize,
    jump_times: Vec<T>,
    jump_states: Vec<usize>,
}

impl<T: Real> SamplePath<T> {
    pub fn new(
        t_min: T,
        t_max: T,
        initial_state: usize,
        jump_times: Vec<T>,
        jump_states: Vec<usize>,
    ) -> Result<Self> {
        check_times(t_min, t_max, &jump_times)?;
        if jump_times.len() != jump_states.len() {
            return Err(Error::InvalidPath(format!(
                "{} jump times but {} jump states",
                jump_times.len(),
                jump_states.len()
            )));
        }
        let mut prev = initial_state;
        for (i, &x) in jump_states.iter().enumerate() {
            if x == prev {
                return Err(Error::InvalidPath(format!(
                    "jump {i} at {} does not change the state {x}",
                    jump_times[i]
                )));
            }
            prev = x;
        }
        Ok(Self {
            t_min,
            t_max,
            initial_state,
            jump_times,
            jump_states,
        })
    }

    pub fn constant(t_min: T, t_max: T, state: usize) -> Self {
        Self {
            t_min,
            t_max,
            initial_state: state,
            jump_times: Vec::new(),
            jump_states: Vec::new(),
        }
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn final_state(&self) -> usize {
        self.jump_states.last().copied().unwrap_or(self.initial_state)
    }

    pub fn jump_times(&self) -> &[T] {
        &self.jump_times
    }

    pub fn jump_states(&self) -> &[usize] {
        &self.jump_states
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    pub fn interval(&self) -> (T, T) {
        (self.t_min, self.t_max)
    }

    /// `(time, new_state)` pairs in time order.
    pub fn jumps(&self) -> impl Iterator<Item = (T, usize)> + '_ {
        self.jump_times
            .iter()
            .copied()
            .zip(self.jump_states.iter().copied())
    }

    /// State before jump `k`.
    pub fn state_before(&self, k: usize) -> usize {
        if k == 0 {
            self.initial_state
        } else {
            self.jump_states[k - 1]
        }
    }

    /// The same path viewed as a marked path without virtual points.
    pub fn to_marked(&self) -> MarkedPath<T> {
        let mut states = Vec::with_capacity(self.jump_states.len() + 1);
        states.push(self.initial_state);
        states.extend_from_slice(&self.jump_states);
        MarkedPath {
            t_min: self.t_min,
            t_max: self.t_max,
            times: self.jump_times.clone(),
            states,
        }
    }

    /// True when `t` is one of the jump times.
    pub fn has_jump_at(&self, t: T) -> bool {
        self.jump_times
            .binary_search_by(|s| s.partial_cmp(&t).unwrap())
            .is_ok()
    }

    /// Relabels states: `x` becomes `perm[x]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        Self {
            t_min: self.t_min,
            t_max: self.t_max,
            initial_state: perm[self.initial_state],
            jump_times: self.jump_times.clone(),
            jump_states: self.jump_states.iter().map(|&x| perm[x]).collect(),
        }
    }
}

impl<T: Real> PathView<T> for SamplePath<T> {
    fn t_min(&self) -> T {
        self.t_min
    }

    fn t_max(&self) -> T {
        self.t_max
    }

    fn state_at(&self, t: T) -> usize {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.state_before(k)
    }

    fn jumps_between(&self, lo: T, hi: T, out: &mut Vec<(T, usize)>) {
        let start = self.jump_times.partition_point(|&s| s <= lo);
        for k in start..self.jump_times.len() {
            if self.jump_times[k] > hi {
                break;
            }
            out.push((self.jump_times[k], self.jump_states[k]));
        }
    }
}

/// Collapses a marked path to its actual sample path.
pub fn collapse<T: Real>(path: &MarkedPath<T>) -> SamplePath<T> {
    path.collapse()
}
