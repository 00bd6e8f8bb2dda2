use crate::ctbn::{log_rho, CtbnSpec, CtbnTrajectory, InitialDistribution};
use crate::error::{Error, Result};
use crate::markov::SamplePath;
use crate::scalar::Real;

/// Completely observed paths of a subset of the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence<T> {
    t_min: T,
    t_max: T,
    paths: Vec<Option<SamplePath<T>>>,
}

impl<T: Real> Evidence<T> {
    pub fn new(spec: &CtbnSpec<T>, t_min: T, t_max: T, observed: Vec<(usize, SamplePath<T>)>) -> Result<Self> {
        if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::InvalidEvidence(format!(
                "interval [{t_min}, {t_max}] is empty or not finite"
            )));
        }
        let mut paths = vec![None; spec.node_count()];
        for (v, path) in observed {
            if v >= spec.node_count() {
                return Err(Error::InvalidEvidence(format!("no node with index {v}")));
            }
            if paths[v].is_some() {
                return Err(Error::InvalidEvidence(format!(
                    "node {} observed twice",
                    spec.node(v).name
                )));
            }
            if path.interval() != (t_min, t_max) {
                return Err(Error::InvalidEvidence(format!(
                    "path of node {} does not cover [{t_min}, {t_max}]",
                    spec.node(v).name
                )));
            }
            let size = spec.alphabet_size(v);
            if path.initial_state() >= size || path.jump_states().iter().any(|&x| x >= size) {
                return Err(Error::InvalidEvidence(format!(
                    "path of node {} leaves its alphabet",
                    spec.node(v).name
                )));
            }
            paths[v] = Some(path);
        }
        let mut times: Vec<T> = paths
            .iter()
            .flatten()
            .flat_map(|p| p.jump_times().iter().copied())
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if times.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidEvidence("two observed nodes jump simultaneously".into()));
        }
        Ok(Self { t_min, t_max, paths })
    }

    /// No observed nodes.
    pub fn empty(spec: &CtbnSpec<T>, t_min: T, t_max: T) -> Result<Self> {
        Self::new(spec, t_min, t_max, Vec::new())
    }

    pub fn interval(&self) -> (T, T) {
        (self.t_min, self.t_max)
    }

    pub fn is_observed(&self, v: usize) -> bool {
        self.paths[v].is_some()
    }

    pub fn path(&self, v: usize) -> Option<&SamplePath<T>> {
        self.paths[v].as_ref()
    }

    /// Paths indexed by node, `None` for hidden nodes.
    pub fn paths(&self) -> &[Option<SamplePath<T>>] {
        &self.paths
    }

    pub fn observed_nodes(&self) -> Vec<usize> {
        (0..self.paths.len()).filter(|&v| self.is_observed(v)).collect()
    }

    pub fn hidden_nodes(&self) -> Vec<usize> {
        (0..self.paths.len()).filter(|&v| !self.is_observed(v)).collect()
    }

    /// Density factors of the observed nodes in `traj`: the importance weight
    /// of a trajectory whose hidden nodes followed the condition-by-intervention
    /// dynamics.
    pub fn log_weight(&self, spec: &CtbnSpec<T>, traj: &CtbnTrajectory<T>) -> Result<T> {
        let observed = self.observed_nodes();
        let initial = match spec.initial() {
            InitialDistribution::BayesNet(bn) => {
                let x0 = traj.initial_state();
                observed.iter().map(|&w| bn.log_node(w, &x0)).sum::<T>()
            }
            InitialDistribution::FullConditional(_) => {
                return Err(Error::Unsupported(
                    "importance weights need a Bayesian-network initial distribution".into(),
                ))
            }
        };
        Ok(initial + observed.iter().map(|&w| log_rho(spec, w, traj)).sum::<T>())
    }
}
