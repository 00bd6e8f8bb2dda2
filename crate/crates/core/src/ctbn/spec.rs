use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::markov::{sample_index, IntensityMatrix};
use crate::scalar::{ln0, Real};

/// Evaluator for the initial distribution given through its full
/// conditionals `nu(x_v(0) | x_(-v)(0))`.
pub trait FullConditionalInitial<T>: Debug + Send + Sync {
    /// `log nu(x_v | x_(-v))`, normalized over the alphabet of `v`.
    fn log_conditional(&self, v: usize, x0: &[usize]) -> T;
    /// Joint log density, possibly up to an additive constant.
    fn log_joint(&self, x0: &[usize]) -> T;
    /// Draws a joint initial configuration.
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<usize>;
}

/// Initial distribution given as a static Bayesian network over the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNetInitial<T> {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// `tables[v][c]` is `nu(. | parent configuration c)`.
    tables: Vec<Vec<Vec<T>>>,
    order: Vec<usize>,
}

impl<T: Real> BayesNetInitial<T> {
    /// `parents[v]` must be sorted; `tables[v]` holds one probability row per
    /// parent configuration in mixed-radix order.
    pub fn new(sizes: &[usize], parents: Vec<Vec<usize>>, tables: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let n = sizes.len();
        if parents.len() != n || tables.len() != n {
            return Err(Error::InvalidSpec(format!(
                "initial network needs {n} parent lists and tables"
            )));
        }
        for (v, pa) in parents.iter().enumerate() {
            if pa.windows(2).any(|w| w[0] >= w[1]) || pa.iter().any(|&p| p >= n || p == v) {
                return Err(Error::InvalidSpec(format!(
                    "initial parents of node {v} must be distinct other nodes in increasing order"
                )));
            }
            let configs: usize = pa.iter().map(|&p| sizes[p]).product();
            if tables[v].len() != configs {
                return Err(Error::InvalidSpec(format!(
                    "initial table of node {v} has {} rows, expected {configs}",
                    tables[v].len()
                )));
            }
            for (c, row) in tables[v].iter().enumerate() {
                if row.len() != sizes[v] {
                    return Err(Error::InvalidSpec(format!(
                        "initial row {c} of node {v} has {} entries, expected {}",
                        row.len(),
                        sizes[v]
                    )));
                }
                let total: f64 = row.iter().map(|p| p.as_f64()).sum();
                if row.iter().any(|&p| !(p >= T::zero())) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "initial row {c} of node {v} is not a probability vector (sum {total})"
                    )));
                }
            }
        }
        let order = topological_order(&parents).ok_or_else(|| {
            Error::InvalidSpec("initial distribution graph has a cycle".to_string())
        })?;
        let mut children = vec![Vec::new(); n];
        for (v, pa) in parents.iter().enumerate() {
            for &p in pa {
                children[p].push(v);
            }
        }
        Ok(Self {
            parents,
            children,
            tables,
            order,
        })
    }

    /// Independent marginals, no edges.
    pub fn independent(marginals: Vec<Vec<T>>) -> Result<Self> {
        let sizes: Vec<usize> = marginals.iter().map(Vec::len).collect();
        let n = marginals.len();
        Self::new(
            &sizes,
            vec![Vec::new(); n],
            marginals.into_iter().map(|m| vec![m]).collect(),
        )
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn table(&self, v: usize) -> &[Vec<T>] {
        &self.tables[v]
    }

    /// Topological order of the initial-distribution DAG.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn config(&self, v: usize, x0: &[usize]) -> usize {
        self.parents[v].iter().fold(0, |c, &p| c * self.tables[p][0].len() + x0[p])
    }

    /// `nu(x_v | x_pa(v))` at configuration `x0`.
    pub fn conditional(&self, v: usize, x0: &[usize]) -> &[T] {
        &self.tables[v][self.config(v, x0)]
    }

    pub fn log_node(&self, v: usize, x0: &[usize]) -> T {
        ln0(self.conditional(v, x0)[x0[v]])
    }

    pub fn log_prob(&self, x0: &[usize]) -> T {
        (0..self.parents.len()).map(|v| self.log_node(v, x0)).sum()
    }

    /// Samples the nodes marked `None` in topological order, keeping the
    /// fixed coordinates.
    pub fn sample_given<R: Rng + ?Sized>(&self, fixed: &[Option<usize>], rng: &mut R) -> Vec<usize> {
        let mut x0: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
        for &v in &self.order {
            if fixed[v].is_none() {
                x0[v] = sample_index(rng, self.conditional(v, &x0)).expect("probability row");
            }
        }
        x0
    }
}

fn topological_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (v, pa) in parents.iter().enumerate() {
        for &p in pa {
            children[p].push(v);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in children[v].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Distribution of the configuration at `t_min`.
#[derive(Debug, Clone)]
pub enum InitialDistribution<T> {
    BayesNet(BayesNetInitial<T>),
    FullConditional(Arc<dyn FullConditionalInitial<T>>),
}

impl<T: PartialEq> PartialEq for InitialDistribution<T> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::BayesNet(a), Self::BayesNet(b)) => a == b,
            (Self::FullConditional(a), Self::FullConditional(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl<T: Real> InitialDistribution<T> {
    pub fn log_prob(&self, x0: &[usize]) -> T {
        match self {
            Self::BayesNet(bn) => bn.log_prob(x0),
            Self::FullConditional(fc) => fc.log_joint(x0),
        }
    }
}

/// Declaration of one node: its state labels, parents and one conditional
/// intensity matrix per parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec<T> {
    pub name: String,
    pub states: Vec<String>,
    /// Parent node indices, strictly increasing.
    pub parents: Vec<usize>,
    /// Indexed by the mixed-radix parent configuration; the first parent is
    /// the most significant digit.
    pub cims: Vec<Arc<IntensityMatrix<T>>>,
}

/// A continuous time Bayesian network: nodes with finite alphabets, a
/// possibly cyclic parent graph, conditional intensity matrices and an
/// initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnSpec<T> {
    nodes: Vec<NodeSpec<T>>,
    children: Vec<Vec<usize>>,
    initial: InitialDistribution<T>,
}

impl<T: Real> CtbnSpec<T> {
    pub fn new(nodes: Vec<NodeSpec<T>>, initial: InitialDistribution<T>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidSpec("network has no nodes".to_string()));
        }
        let sizes: Vec<usize> = nodes.iter().map(|node| node.states.len()).collect();
        for (v, node) in nodes.iter().enumerate() {
            let name = &node.name;
            if sizes[v] == 0 {
                return Err(Error::InvalidSpec(format!("node {name} has an empty alphabet")));
            }
            if nodes[..v].iter().any(|other| &other.name == name) {
                return Err(Error::InvalidSpec(format!("duplicate node name {name}")));
            }
            if node.parents.windows(2).any(|w| w[0] >= w[1])
                || node.parents.iter().any(|&p| p >= n || p == v)
            {
                return Err(Error::InvalidSpec(format!(
                    "parents of {name} must be distinct other nodes in increasing order"
                )));
            }
            let configs: usize = node.parents.iter().map(|&p| sizes[p]).product();
            if node.cims.len() != configs {
                return Err(Error::InvalidSpec(format!(
                    "node {name} has {} intensity matrices, expected {configs}",
                    node.cims.len()
                )));
            }
            if let Some(c) = node.cims.iter().position(|q| q.size() != sizes[v]) {
                return Err(Error::InvalidSpec(format!(
                    "intensity matrix {c} of node {name} has the wrong size"
                )));
            }
        }
        match &initial {
            InitialDistribution::BayesNet(bn) => {
                for v in 0..n {
                    if bn.table(v).first().map(Vec::len) != Some(sizes[v]) {
                        return Err(Error::InvalidSpec(format!(
                            "initial table of {} does not match its alphabet",
                            nodes[v].name
                        )));
                    }
                }
            }
            InitialDistribution::FullConditional(_) => {}
        }
        let mut children = vec![Vec::new(); n];
        for (v, node) in nodes.iter().enumerate() {
            for &p in &node.parents {
                children[p].push(v);
            }
        }
        Ok(Self {
            nodes,
            children,
            initial,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, v: usize) -> &NodeSpec<T> {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[NodeSpec<T>] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn alphabet_size(&self, v: usize) -> usize {
        self.nodes[v].states.len()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.nodes[v].parents
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn initial(&self) -> &InitialDistribution<T> {
        &self.initial
    }

    pub fn config_count(&self, v: usize) -> usize {
        self.nodes[v].cims.len()
    }

    pub fn cim(&self, v: usize, config: usize) -> &Arc<IntensityMatrix<T>> {
        &self.nodes[v].cims[config]
    }

    /// Mixed-radix index of the parent configuration of `v` in joint state `x`.
    pub fn config_of(&self, v: usize, x: &[usize]) -> usize {
        self.config_from(v, |p| x[p])
    }

    pub(crate) fn config_from(&self, v: usize, mut state: impl FnMut(usize) -> usize) -> usize {
        self.nodes[v]
            .parents
            .iter()
            .fold(0, |c, &p| c * self.alphabet_size(p) + state(p))
    }

    /// Parent states encoded by configuration index `config`.
    pub fn decode_config(&self, v: usize, mut config: usize) -> Vec<usize> {
        let parents = &self.nodes[v].parents;
        let mut out = vec![0; parents.len()];
        for (k, &p) in parents.iter().enumerate().rev() {
            let size = self.alphabet_size(p);
            out[k] = config % size;
            config /= size;
        }
        out
    }

    /// Size of the joint state space, saturating on overflow.
    pub fn joint_size(&self) -> usize {
        self.nodes
            .iter()
            .try_fold(1usize, |acc, n| acc.checked_mul(n.states.len()))
            .unwrap_or(usize::MAX)
    }

    /// Joint index with the first node as the most significant digit.
    pub fn encode_joint(&self, x: &[usize]) -> usize {
        x.iter()
            .enumerate()
            .fold(0, |acc, (v, &s)| acc * self.alphabet_size(v) + s)
    }

    pub fn decode_joint(&self, mut index: usize) -> Vec<usize> {
        let mut x = vec![0; self.node_count()];
        for v in (0..self.node_count()).rev() {
            let size = self.alphabet_size(v);
            x[v] = index % size;
            index /= size;
        }
        x
    }

    /// Log initial probability of configuration `x0`.
    pub fn log_initial(&self, x0: &[usize]) -> T {
        self.initial.log_prob(x0)
    }

    /// Initial law of node `v` given every other coordinate of `x0`, as
    /// used by the single-node Gibbs update.
    ///
    /// For a Bayesian-network initial distribution this is
    /// `nu(. | x_pa0(v))`; the factors of the initial children of `v` belong
    /// to the likelihood instead.
    pub fn node_initial(&self, v: usize, x0: &[usize]) -> Vec<T> {
        match &self.initial {
            InitialDistribution::BayesNet(bn) => bn.conditional(v, x0).to_vec(),
            InitialDistribution::FullConditional(fc) => {
                let mut x = x0.to_vec();
                let logs: Vec<T> = (0..self.alphabet_size(v))
                    .map(|a| {
                        x[v] = a;
                        fc.log_conditional(v, &x)
                    })
                    .collect();
                let norm = crate::scalar::log_sum_exp(&logs);
                logs.into_iter().map(|l| (l - norm).exp()).collect()
            }
        }
    }

    /// Samples the initial coordinates marked `None`, keeping the fixed ones.
    ///
    /// Bayesian-network form samples the condition-by-intervention initial
    /// law. Full-conditional form draws a joint sample and then runs a few
    /// Gibbs passes over the free coordinates given the fixed ones.
    pub fn sample_initial<R: Rng>(&self, fixed: &[Option<usize>], rng: &mut R) -> Vec<usize> {
        match &self.initial {
            InitialDistribution::BayesNet(bn) => bn.sample_given(fixed, rng),
            InitialDistribution::FullConditional(fc) => {
                let mut x0 = fc.sample(rng);
                for (v, f) in fixed.iter().enumerate() {
                    if let Some(s) = f {
                        x0[v] = *s;
                    }
                }
                for _ in 0..10 {
                    for v in (0..self.node_count()).filter(|&v| fixed[v].is_none()) {
                        let probs = self.node_initial(v, &x0);
                        x0[v] = sample_index(rng, &probs).expect("normalized conditional");
                    }
                }
                x0
            }
        }
    }
}
