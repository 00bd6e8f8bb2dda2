use std::sync::Arc;

use crate::error::{Error, Result};
use crate::markov::{IntensityMatrix, LambdaPolicy, RegimePartition};
use crate::scalar::{ln0, Real};

use super::spec::{CtbnSpec, InitialDistribution};
use super::trajectory::{CtbnTrajectory, TrajectoryView};

/// Walks the timeline of node `v` on `[lo, hi]`, reporting holding spans
/// `(config, state, dt)` and jumps `(config, from, to)` of `v`.
///
/// Jumps exactly at `lo` are taken as already in force.
fn walk_node<T: Real>(
    spec: &CtbnSpec<T>,
    v: usize,
    view: &dyn TrajectoryView<T>,
    lo: T,
    hi: T,
    mut hold: impl FnMut(usize, usize, T),
    mut jump: impl FnMut(usize, usize, usize),
) {
    let parents = spec.parents(v);
    let own = view.node_path(v);
    let mut parent_states: Vec<usize> = parents
        .iter()
        .map(|&p| view.node_path(p).state_at(lo))
        .collect();
    let mut state = own.state_at(lo);
    let mut buf = Vec::new();
    let mut events: Vec<(T, usize, usize)> = Vec::new();
    own.jumps_between(lo, hi, &mut buf);
    events.extend(buf.drain(..).map(|(t, x)| (t, usize::MAX, x)));
    for (k, &p) in parents.iter().enumerate() {
        view.node_path(p).jumps_between(lo, hi, &mut buf);
        events.extend(buf.drain(..).map(|(t, x)| (t, k, x)));
    }
    if !parents.is_empty() {
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    let config = |ps: &[usize]| {
        parents
            .iter()
            .zip(ps)
            .fold(0, |c, (&p, &s)| c * spec.alphabet_size(p) + s)
    };
    let mut c = config(&parent_states);
    let mut cur = lo;
    for (t, slot, x) in events {
        hold(c, state, t - cur);
        cur = t;
        if slot == usize::MAX {
            jump(c, state, x);
            state = x;
        } else {
            parent_states[slot] = x;
            c = config(&parent_states);
        }
    }
    hold(c, state, hi - cur);
}

/// Log of the condition-by-intervention factor of node `v` restricted to
/// the window `[lo, hi]`.
pub fn log_rho_window<T: Real>(
    spec: &CtbnSpec<T>,
    v: usize,
    view: &dyn TrajectoryView<T>,
    lo: T,
    hi: T,
) -> T {
    let mut total = T::zero();
    let mut jumps = T::zero();
    walk_node(
        spec,
        v,
        view,
        lo,
        hi,
        |c, a, dt| {
            if dt > T::zero() {
                total -= spec.cim(v, c).total_rate(a) * dt;
            }
        },
        |c, a, b| jumps += ln0(spec.cim(v, c).rate(a, b)),
    );
    total + jumps
}

/// `log rho(xi_v || xi_pa(v))` over the whole interval.
pub fn log_rho<T: Real>(spec: &CtbnSpec<T>, v: usize, traj: &dyn TrajectoryView<T>) -> T {
    let (lo, hi) = traj.interval();
    log_rho_window(spec, v, traj, lo, hi)
}

/// `log p(xi) = log nu(x(0)) + sum_v log rho(xi_v || xi_pa(v))`.
pub fn log_density<T: Real>(spec: &CtbnSpec<T>, traj: &CtbnTrajectory<T>) -> T {
    let x0 = traj.initial_state();
    let init = spec.log_initial(&x0);
    if init == T::neg_infinity() {
        return init;
    }
    init + (0..spec.node_count()).map(|v| log_rho(spec, v, traj)).sum::<T>()
}

/// Sum of the factors `log rho` of the nodes in `nodes`.
pub fn log_cbi<T: Real>(spec: &CtbnSpec<T>, nodes: &[usize], traj: &CtbnTrajectory<T>) -> T {
    nodes.iter().map(|&v| log_rho(spec, v, traj)).sum()
}

/// Jump counts and holding times of one node, keyed by parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats<T> {
    size: usize,
    configs: usize,
    counts: Vec<u64>,
    durations: Vec<T>,
}

impl<T: Real> NodeStats<T> {
    pub fn zeros(size: usize, configs: usize) -> Self {
        Self {
            size,
            configs,
            counts: vec![0; configs * size * size],
            durations: vec![T::zero(); configs * size],
        }
    }

    pub fn configs(&self) -> usize {
        self.configs
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `n_v(c; a, a')`.
    pub fn count(&self, c: usize, a: usize, b: usize) -> u64 {
        self.counts[(c * self.size + a) * self.size + b]
    }

    /// `t_v(c; a)`.
    pub fn duration(&self, c: usize, a: usize) -> T {
        self.durations[c * self.size + a]
    }

    pub fn total_duration(&self) -> T {
        self.durations.iter().copied().sum()
    }

    pub fn total_jumps(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add_jump(&mut self, c: usize, a: usize, b: usize) {
        self.counts[(c * self.size + a) * self.size + b] += 1;
    }

    pub fn add_duration(&mut self, c: usize, a: usize, dt: T) {
        self.durations[c * self.size + a] += dt;
    }

    /// `sum n log Q_v(c; a, a') - sum Q_v(c; a) t_v(c; a)`.
    pub fn log_rho(&self, spec: &CtbnSpec<T>, v: usize) -> T {
        let mut total = T::zero();
        for c in 0..self.configs {
            let q = spec.cim(v, c);
            for a in 0..self.size {
                let d = self.duration(c, a);
                if d > T::zero() {
                    total -= q.total_rate(a) * d;
                }
                for b in 0..self.size {
                    let n = self.count(c, a, b);
                    if n > 0 {
                        total += T::from_count(n as usize) * ln0(q.rate(a, b));
                    }
                }
            }
        }
        total
    }
}

/// Sufficient statistics of a whole trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats<T> {
    pub nodes: Vec<NodeStats<T>>,
}

pub fn node_stats<T: Real>(spec: &CtbnSpec<T>, v: usize, traj: &dyn TrajectoryView<T>) -> NodeStats<T> {
    let (lo, hi) = traj.interval();
    let stats = std::cell::RefCell::new(NodeStats::zeros(spec.alphabet_size(v), spec.config_count(v)));
    walk_node(
        spec,
        v,
        traj,
        lo,
        hi,
        |c, a, dt| stats.borrow_mut().add_duration(c, a, dt),
        |c, a, b| stats.borrow_mut().add_jump(c, a, b),
    );
    stats.into_inner()
}

pub fn sufficient_stats<T: Real>(spec: &CtbnSpec<T>, traj: &CtbnTrajectory<T>) -> SufficientStats<T> {
    SufficientStats {
        nodes: (0..spec.node_count()).map(|v| node_stats(spec, v, traj)).collect(),
    }
}

/// The piecewise-homogeneous dynamics of node `v` with its parents' paths
/// held fixed: one regime per stretch of constant parent configuration.
pub fn local_regimes<T: Real>(
    spec: &CtbnSpec<T>,
    v: usize,
    traj: &dyn TrajectoryView<T>,
    policy: LambdaPolicy,
) -> Result<RegimePartition<T>> {
    let (t_min, t_max) = traj.interval();
    let parents = spec.parents(v);
    let mut events: Vec<(T, usize, usize)> = Vec::new();
    let mut buf = Vec::new();
    for (k, &p) in parents.iter().enumerate() {
        traj.node_path(p).jumps_between(t_min, t_max, &mut buf);
        events.extend(buf.drain(..).map(|(t, x)| (t, k, x)));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut states: Vec<usize> = parents
        .iter()
        .map(|&p| traj.node_path(p).state_at(t_min))
        .collect();
    let config = |ps: &[usize]| {
        parents
            .iter()
            .zip(ps)
            .fold(0, |c, (&p, &s)| c * spec.alphabet_size(p) + s)
    };
    let mut regimes = vec![spec.cim(v, config(&states)).clone()];
    let mut breakpoints = Vec::with_capacity(events.len());
    for (t, k, x) in events {
        states[k] = x;
        breakpoints.push(t);
        regimes.push(spec.cim(v, config(&states)).clone());
    }
    RegimePartition::with_policy(t_min, t_max, breakpoints, regimes, policy)
}

/// Prior and likelihood parts of the single-node conditional of `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConditional<T> {
    /// `log nu(x_v(0) || x_(-v)(0)) + log rho(xi_v || xi_pa(v))`.
    pub log_prior: T,
    /// Initial factors of the other nodes plus `sum_(w in ch(v)) log rho(xi_w || xi_pa(w))`.
    pub log_likelihood: T,
}

pub fn node_conditional_logdensity<T: Real>(
    spec: &CtbnSpec<T>,
    v: usize,
    traj: &CtbnTrajectory<T>,
) -> NodeConditional<T> {
    let x0 = traj.initial_state();
    let children: T = spec.children(v).iter().map(|&w| log_rho(spec, w, traj)).sum();
    let own = log_rho(spec, v, traj);
    match spec.initial() {
        InitialDistribution::BayesNet(bn) => NodeConditional {
            log_prior: bn.log_node(v, &x0) + own,
            log_likelihood: (0..spec.node_count())
                .filter(|&w| w != v)
                .map(|w| bn.log_node(w, &x0))
                .sum::<T>()
                + children,
        },
        InitialDistribution::FullConditional(fc) => NodeConditional {
            log_prior: fc.log_conditional(v, &x0) + own,
            log_likelihood: children,
        },
    }
}

/// Default cap on the joint state space for dense oracle computations.
pub const DEFAULT_JOINT_CAP: usize = 10_000;

/// Intensity matrix of the whole network viewed as one Markov process on
/// the product of the alphabets.
pub fn amalgamate<T: Real>(spec: &CtbnSpec<T>, cap: usize) -> Result<IntensityMatrix<T>> {
    let size = spec.joint_size();
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let mut transitions = Vec::new();
    for index in 0..size {
        let mut x = spec.decode_joint(index);
        for v in 0..spec.node_count() {
            let c = spec.config_of(v, &x);
            let from = x[v];
            for &(to, rate) in spec.cim(v, c).row(from) {
                x[v] = to;
                transitions.push((index, spec.encode_joint(&x), rate));
            }
            x[v] = from;
        }
    }
    IntensityMatrix::from_transitions(size, transitions)
}

/// Initial distribution over the joint state space.
pub fn joint_initial<T: Real>(spec: &CtbnSpec<T>, cap: usize) -> Result<Vec<T>> {
    let size = spec.joint_size();
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let logs: Vec<T> = (0..size)
        .map(|i| spec.log_initial(&spec.decode_joint(i)))
        .collect();
    let norm = crate::scalar::log_sum_exp(&logs);
    Ok(logs.into_iter().map(|l| (l - norm).exp()).collect())
}

/// Shared intensity matrices of `v` keyed by configuration, for callers
/// that build their own regimes.
pub fn node_cims<T: Real>(spec: &CtbnSpec<T>, v: usize) -> Vec<Arc<IntensityMatrix<T>>> {
    spec.node(v).cims.clone()
}
