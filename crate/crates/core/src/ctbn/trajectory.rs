use crate::error::{Error, Result};
use crate::markov::{PathView, SamplePath};
use crate::scalar::Real;

use super::spec::CtbnSpec;

/// Access to one path per node, possibly with one node's path swapped out.
pub trait TrajectoryView<T> {
    fn node_path(&self, v: usize) -> &dyn PathView<T>;
    fn interval(&self) -> (T, T);
}

/// Per-node sample paths over a common interval.
///
/// No two nodes jump at exactly the same time.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnTrajectory<T> {
    paths: Vec<SamplePath<T>>,
}

impl<T: Real> CtbnTrajectory<T> {
    pub fn new(paths: Vec<SamplePath<T>>) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidPath("trajectory has no nodes".to_string()))?
            .interval();
        if let Some(v) = paths.iter().position(|p| p.interval() != first) {
            return Err(Error::InvalidPath(format!(
                "path of node {v} covers a different interval"
            )));
        }
        let mut all: Vec<T> = paths.iter().flat_map(|p| p.jump_times().iter().copied()).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!(
                "two nodes jump simultaneously at {}",
                w[0]
            )));
        }
        Ok(Self { paths })
    }

    /// Checks that the trajectory fits the alphabets of `spec`.
    pub fn check_against(&self, spec: &CtbnSpec<T>) -> Result<()> {
        if self.paths.len() != spec.node_count() {
            return Err(Error::InvalidPath(format!(
                "trajectory has {} nodes, network has {}",
                self.paths.len(),
                spec.node_count()
            )));
        }
        for (v, p) in self.paths.iter().enumerate() {
            let size = spec.alphabet_size(v);
            if p.initial_state() >= size || p.jump_states().iter().any(|&x| x >= size) {
                return Err(Error::InvalidPath(format!(
                    "path of node {} leaves its alphabet",
                    spec.node(v).name
                )));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, v: usize) -> &SamplePath<T> {
        &self.paths[v]
    }

    pub fn paths(&self) -> &[SamplePath<T>] {
        &self.paths
    }

    pub fn interval(&self) -> (T, T) {
        self.paths[0].interval()
    }

    pub fn initial_state(&self) -> Vec<usize> {
        self.paths.iter().map(SamplePath::initial_state).collect()
    }

    pub fn state_at(&self, t: T) -> Vec<usize> {
        self.paths.iter().map(|p| p.state_at(t)).collect()
    }

    /// True when `path` shares a jump time with some node other than `v`.
    pub fn clashes(&self, v: usize, path: &SamplePath<T>) -> bool {
        self.paths
            .iter()
            .enumerate()
            .filter(|&(w, _)| w != v)
            .any(|(_, other)| path.jump_times().iter().any(|&t| other.has_jump_at(t)))
    }

    /// Replaces the path of node `v`, rejecting simultaneous jumps.
    pub fn replace(&mut self, v: usize, path: SamplePath<T>) -> Result<()> {
        if path.interval() != self.interval() {
            return Err(Error::InvalidPath(format!(
                "replacement path for node {v} covers a different interval"
            )));
        }
        if self.clashes(v, &path) {
            return Err(Error::InvalidPath(format!(
                "replacement path for node {v} jumps together with another node"
            )));
        }
        self.paths[v] = path;
        Ok(())
    }

    /// All jumps of all nodes as `(time, node, new_state)`, in time order.
    pub fn events(&self) -> Vec<(T, usize, usize)> {
        let mut events: Vec<(T, usize, usize)> = self
            .paths
            .iter()
            .enumerate()
            .flat_map(|(v, p)| p.jumps().map(move |(t, x)| (t, v, x)))
            .collect();
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        events
    }

    /// The same trajectory as one path over the joint state space.
    pub fn to_joint_path(&self, spec: &CtbnSpec<T>) -> SamplePath<T> {
        let (t_min, t_max) = self.interval();
        let mut x = self.initial_state();
        let initial = spec.encode_joint(&x);
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (t, v, s) in self.events() {
            x[v] = s;
            times.push(t);
            states.push(spec.encode_joint(&x));
        }
        SamplePath::new(t_min, t_max, initial, times, states).expect("joint path is valid")
    }
}

impl<T: Real> TrajectoryView<T> for CtbnTrajectory<T> {
    fn node_path(&self, v: usize) -> &dyn PathView<T> {
        &self.paths[v]
    }

    fn interval(&self) -> (T, T) {
        CtbnTrajectory::interval(self)
    }
}

/// A trajectory with the path of one node replaced by another view.
pub struct Replaced<'a, T> {
    pub base: &'a CtbnTrajectory<T>,
    pub node: usize,
    pub path: &'a dyn PathView<T>,
}

impl<T: Real> TrajectoryView<T> for Replaced<'_, T> {
    fn node_path(&self, v: usize) -> &dyn PathView<T> {
        if v == self.node {
            self.path
        } else {
            self.base.node_path(v)
        }
    }

    fn interval(&self) -> (T, T) {
        self.base.interval()
    }
}
