use std::collections::HashMap;

use crate::ctbn::{CtbnSpec, DEFAULT_JOINT_CAP};
use crate::error::{Error, Result};
use crate::gibbs::{Diagnostics, Evidence, PosteriorEstimate, TimeGrid};
use crate::scalar::Real;

use nalgebra::{DMatrix, DVector};

/// Limits of the dense oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest joint state space accepted.
    pub joint_cap: usize,
    /// Largest hidden state space for the dense propagators.
    pub hidden_cap: usize,
    /// Largest gap tolerated between the step `delta` and `delta / 2` results.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            joint_cap: DEFAULT_JOINT_CAP,
            hidden_cap: 1024,
            tolerance: 1e-3,
        }
    }
}

/// Smoothed marginals of the hidden product chain on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothing {
    pub hidden: Vec<usize>,
    /// `joint[g][h]`: posterior of hidden configuration `h` at grid point `g`.
    pub joint: Vec<Vec<f64>>,
    /// Log density of the observed paths.
    pub log_evidence: f64,
}

/// Product chain of the hidden nodes with the observed nodes clamped.
struct Clamped<'a, T> {
    spec: &'a CtbnSpec<T>,
    hidden: Vec<usize>,
    observed: Vec<usize>,
    size: usize,
}

impl<'a, T: Real> Clamped<'a, T> {
    fn new(spec: &'a CtbnSpec<T>, evidence: &Evidence<T>, config: &OracleConfig) -> Result<Self> {
        let joint = spec.joint_size();
        if joint > config.joint_cap {
            return Err(Error::CapExceeded {
                size: joint,
                cap: config.joint_cap,
            });
        }
        let hidden = evidence.hidden_nodes();
        let size: usize = hidden.iter().map(|&v| spec.alphabet_size(v)).product();
        if size > config.hidden_cap {
            return Err(Error::CapExceeded {
                size,
                cap: config.hidden_cap,
            });
        }
        Ok(Self {
            spec,
            hidden,
            observed: evidence.observed_nodes(),
            size,
        })
    }

    /// Fills the hidden coordinates of `x` from the hidden index `h`, the
    /// last hidden node varying fastest.
    fn fill(&self, mut h: usize, x: &mut [usize]) {
        for &v in self.hidden.iter().rev() {
            let s = self.spec.alphabet_size(v);
            x[v] = h % s;
            h /= s;
        }
    }

    fn index(&self, x: &[usize]) -> usize {
        self.hidden
            .iter()
            .fold(0, |h, &v| h * self.spec.alphabet_size(v) + x[v])
    }

    /// Generator of the hidden coordinates with the observed ones held at
    /// `y`; the diagonal keeps the full exit rate so observed survival is
    /// accounted for.
    fn generator(&self, y: &[usize]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.size, self.size);
        let mut x = y.to_vec();
        for h in 0..self.size {
            self.fill(h, &mut x);
            let mut exit = T::zero();
            for v in 0..self.spec.node_count() {
                let q = self.spec.cim(v, self.spec.config_of(v, &x));
                exit += q.total_rate(x[v]);
            }
            g[(h, h)] = -exit.as_f64();
            for &v in &self.hidden {
                let q = self.spec.cim(v, self.spec.config_of(v, &x));
                let from = x[v];
                for &(to, rate) in q.row(from) {
                    x[v] = to;
                    let k = self.index(&x);
                    g[(h, k)] += rate.as_f64();
                }
                x[v] = from;
            }
        }
        g
    }

    /// Rates of the observed jump `(node w, to)` for every hidden configuration.
    fn jump_rates(&self, y: &[usize], w: usize, to: usize) -> DVector<f64> {
        let mut x = y.to_vec();
        DVector::from_iterator(
            self.size,
            (0..self.size).map(|h| {
                self.fill(h, &mut x);
                self.spec.cim(w, self.spec.config_of(w, &x)).rate(x[w], to).as_f64()
            }),
        )
    }

    fn initial(&self, y: &[usize]) -> DVector<f64> {
        let mut x = y.to_vec();
        DVector::from_iterator(
            self.size,
            (0..self.size).map(|h| {
                self.fill(h, &mut x);
                self.spec.log_initial(&x).exp().as_f64()
            }),
        )
    }

    fn marginals(&self, joint: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self
            .hidden
            .iter()
            .map(|&v| vec![0.0; self.spec.alphabet_size(v)])
            .collect();
        let mut x = vec![0; self.spec.node_count()];
        for (h, &p) in joint.iter().enumerate() {
            self.fill(h, &mut x);
            for (k, &v) in self.hidden.iter().enumerate() {
                out[k][x[v]] += p;
            }
        }
        out
    }
}

enum Step {
    /// Propagate over `len` time units.
    Flow { len: f64 },
    /// Observed jump of node `w` to `to`.
    Jump { w: usize, to: usize },
    /// Record the grid point `g`.
    Grid(usize),
}

fn normalize(v: &mut DVector<f64>) -> f64 {
    let s = v.sum();
    if s > 0.0 {
        *v /= s;
    }
    s.ln()
}

/// Forward-backward smoothing of the hidden nodes given fully observed
/// paths of the others, exact between observed jumps up to the propagator
/// `exp(G delta)` used in steps of at most `delta`.
pub fn smooth<T: Real>(
    spec: &CtbnSpec<T>,
    evidence: &Evidence<T>,
    grid: &TimeGrid<T>,
    delta: T,
    config: &OracleConfig,
) -> Result<Smoothing> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidConfig(format!("oracle step {delta} must be positive")));
    }
    let chain = Clamped::new(spec, evidence, config)?;
    let (t_min, t_max) = evidence.interval();

    let mut events: Vec<(T, u8, usize, usize)> = Vec::new();
    for &w in &chain.observed {
        let path = evidence.path(w).expect("observed");
        for (t, to) in path.jumps() {
            events.push((t, 0, w, to));
        }
    }
    for (g, &t) in grid.points().iter().enumerate() {
        events.push((t, 1, g, 0));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let y0: Vec<usize> = {
        let mut y = vec![0; spec.node_count()];
        for &w in &chain.observed {
            y[w] = evidence.path(w).unwrap().initial_state();
        }
        y
    };
    let mut steps = Vec::new();
    let mut y_of_step = Vec::new();
    let mut y = y0.clone();
    let mut cur = t_min;
    for &(t, kind, a, b) in &events {
        if t > cur {
            steps.push(Step::Flow { len: (t - cur).as_f64() });
            y_of_step.push(y.clone());
            cur = t;
        }
        if kind == 0 {
            steps.push(Step::Jump { w: a, to: b });
            y_of_step.push(y.clone());
            y[a] = b;
        } else {
            steps.push(Step::Grid(a));
            y_of_step.push(y.clone());
        }
    }
    if t_max > cur {
        steps.push(Step::Flow { len: (t_max - cur).as_f64() });
        y_of_step.push(y.clone());
    }

    // One propagator per (observed configuration, sub-step length).
    let observed_key = |y: &[usize]| chain.observed.iter().map(|&w| y[w]).collect::<Vec<_>>();
    let delta_f = delta.as_f64();
    let split = |len: f64| {
        let pieces = (len / delta_f).ceil().max(1.0) as usize;
        (pieces, len / pieces as f64)
    };
    let mut generators: HashMap<Vec<usize>, DMatrix<f64>> = HashMap::new();
    let mut propagators: HashMap<(Vec<usize>, u64), DMatrix<f64>> = HashMap::new();
    for (step, y) in steps.iter().zip(&y_of_step) {
        if let Step::Flow { len } = *step {
            let (_, h) = split(len);
            let key = (observed_key(y), h.to_bits());
            if !propagators.contains_key(&key) {
                let gen = generators
                    .entry(key.0.clone())
                    .or_insert_with(|| chain.generator(y));
                propagators.insert(key, (&*gen * h).exp());
            }
        }
    }
    let propagator = |y: &[usize], len: f64| {
        let (pieces, h) = split(len);
        (&propagators[&(observed_key(y), h.to_bits())], pieces)
    };

    // Forward pass: filtered law just after each step, with log scale.
    let mut alpha = chain.initial(&y0);
    let mut log_scale = normalize(&mut alpha);
    let mut filtered: Vec<Option<DVector<f64>>> = vec![None; grid.len()];
    for (step, y) in steps.iter().zip(&y_of_step) {
        match *step {
            Step::Flow { len } => {
                let (e, pieces) = propagator(y, len);
                for _ in 0..pieces {
                    alpha = e.tr_mul(&alpha);
                    log_scale += normalize(&mut alpha);
                }
            }
            Step::Jump { w, to } => {
                alpha.component_mul_assign(&chain.jump_rates(y, w, to));
                log_scale += normalize(&mut alpha);
            }
            Step::Grid(g) => filtered[g] = Some(alpha.clone()),
        }
        if !log_scale.is_finite() {
            return Err(Error::InvalidEvidence("observed paths have zero probability".into()));
        }
    }

    // Backward pass.
    let mut beta = DVector::from_element(chain.size, 1.0);
    let mut joint = vec![Vec::new(); grid.len()];
    for (step, y) in steps.iter().zip(&y_of_step).rev() {
        match *step {
            Step::Flow { len } => {
                let (e, pieces) = propagator(y, len);
                for _ in 0..pieces {
                    beta = e * &beta;
                    normalize(&mut beta);
                }
            }
            Step::Jump { w, to } => {
                beta.component_mul_assign(&chain.jump_rates(y, w, to));
                normalize(&mut beta);
            }
            Step::Grid(g) => {
                let a = filtered[g].as_ref().expect("forward pass visited every grid point");
                let p = a.component_mul(&beta);
                let z = p.sum();
                joint[g] = p.iter().map(|x| x / z).collect();
            }
        }
    }
    Ok(Smoothing {
        hidden: chain.hidden.clone(),
        joint,
        log_evidence: log_scale,
    })
}

fn to_estimate<T: Real>(spec: &CtbnSpec<T>, evidence: &Evidence<T>, grid: TimeGrid<T>, s: &Smoothing) -> PosteriorEstimate<T> {
    let config = OracleConfig {
        joint_cap: usize::MAX,
        hidden_cap: usize::MAX,
        ..OracleConfig::default()
    };
    let chain = Clamped::new(spec, evidence, &config).expect("caps already checked");
    let per_grid: Vec<Vec<Vec<f64>>> = s.joint.iter().map(|j| chain.marginals(j)).collect();
    let probabilities = (0..chain.hidden.len())
        .map(|k| per_grid.iter().map(|m| m[k].clone()).collect())
        .collect();
    PosteriorEstimate {
        grid,
        nodes: chain.hidden.clone(),
        probabilities,
        std_errors: None,
        samples: 0,
        diagnostics: Diagnostics::default(),
        chains: Vec::new(),
    }
}

/// Exact posterior marginals of the hidden nodes on an equispaced grid.
///
/// The smoother runs with steps `delta` and `delta / 2`; the result is
/// accepted only if the two agree within the configured tolerance.
pub fn exact_posterior_grid<T: Real>(
    spec: &CtbnSpec<T>,
    evidence: &Evidence<T>,
    grid_points: usize,
    delta: T,
    config: &OracleConfig,
) -> Result<PosteriorEstimate<T>> {
    let (t_min, t_max) = evidence.interval();
    let grid = TimeGrid::equispaced(t_min, t_max, grid_points)?;
    exact_posterior_on(spec, evidence, grid, delta, config)
}

pub fn exact_posterior_on<T: Real>(
    spec: &CtbnSpec<T>,
    evidence: &Evidence<T>,
    grid: TimeGrid<T>,
    delta: T,
    config: &OracleConfig,
) -> Result<PosteriorEstimate<T>> {
    let coarse = smooth(spec, evidence, &grid, delta, config)?;
    let fine = smooth(spec, evidence, &grid, delta / T::lit(2.0), config)?;
    let change = coarse
        .joint
        .iter()
        .flatten()
        .zip(fine.joint.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(change < config.tolerance) {
        return Err(Error::OracleNonConvergence { change });
    }
    Ok(to_estimate(spec, evidence, grid, &fine))
}

/// Default oracle step for an interval.
pub fn default_step<T: Real>(t_min: T, t_max: T) -> T {
    (t_max - t_min) / T::lit(1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctbn::simulate;
    use crate::markov::SamplePath;
    use crate::testing::{example1, node, q, uniform_initial};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state(p0: f64, a: f64, b: f64, t: f64) -> f64 {
        // P(state 0 at t) for rates a: 0 -> 1, b: 1 -> 0.
        let pi = b / (a + b);
        pi + (p0 - pi) * (-(a + b) * t).exp()
    }

    #[test]
    fn prior_marginals_without_evidence() {
        let spec = example1();
        let ev = Evidence::empty(&spec, 0.0, 1.0).unwrap();
        let est = exact_posterior_grid(&spec, &ev, 21, 0.001, &OracleConfig::default()).unwrap();
        for (g, &t) in est.grid.points().iter().enumerate() {
            assert!((est.probabilities[0][g][0] - two_state(0.5, 4.0, 5.0, t)).abs() < 1e-6);
        }
        assert!((est.probabilities[1][0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn child_given_observed_parent() {
        let spec = example1();
        let parent = SamplePath::new(0.0, 1.0, 0, vec![0.4], vec![1]).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(0, parent)]).unwrap();
        let est = exact_posterior_grid(&spec, &ev, 11, 0.001, &OracleConfig::default()).unwrap();
        let at_split = two_state(0.5, 100.0, 20.0, 0.4);
        for (g, &t) in est.grid.points().iter().enumerate() {
            let want = if t < 0.4 {
                two_state(0.5, 100.0, 20.0, t)
            } else {
                two_state(at_split, 20.0, 100.0, t - 0.4)
            };
            assert!((est.probabilities[0][g][0] - want).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn posterior_rows_and_evidence() {
        let spec = example1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tr = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(1, tr.path(1).clone())]).unwrap();
        let grid = TimeGrid::equispaced(0.0, 1.0, 11).unwrap();
        let s = smooth(&spec, &ev, &grid, 0.001, &OracleConfig::default()).unwrap();
        assert!(s.log_evidence.is_finite());
        for row in &s.joint {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
        // The step only splits exact propagators.
        let b = smooth(&spec, &ev, &grid, 0.0003, &OracleConfig::default()).unwrap();
        for (x, y) in s.joint.iter().flatten().zip(b.joint.iter().flatten()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((s.log_evidence - b.log_evidence).abs() < 1e-9);
    }

    #[test]
    fn evidence_of_a_single_observed_root() {
        // Only X observed, no children of X hidden: the evidence is its own density.
        let x = node("X", 2, vec![], vec![q(&[&[-4.0, 4.0], &[5.0, -5.0]])]);
        let y = node("Y", 2, vec![], vec![q(&[&[-1.0, 1.0], &[1.0, -1.0]])]);
        let spec = CtbnSpec::new(vec![x, y], uniform_initial(&[2, 2])).unwrap();
        let path = SamplePath::new(0.0, 1.0, 0, vec![0.3], vec![1]).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(0, path)]).unwrap();
        let grid = TimeGrid::equispaced(0.0, 1.0, 3).unwrap();
        let s = smooth(&spec, &ev, &grid, 0.01, &OracleConfig::default()).unwrap();
        let want = 0.5_f64.ln() - 4.0 * 0.3 + 4.0_f64.ln() - 5.0 * 0.7;
        assert!((s.log_evidence - want).abs() < 1e-9);
    }

    #[test]
    fn limits_and_bad_steps() {
        let spec = example1();
        let ev = Evidence::empty(&spec, 0.0, 1.0).unwrap();
        let capped = OracleConfig { joint_cap: 3, ..OracleConfig::default() };
        assert!(matches!(
            exact_posterior_grid(&spec, &ev, 5, 0.01, &capped),
            Err(Error::CapExceeded { size: 4, cap: 3 })
        ));
        let hidden = OracleConfig { hidden_cap: 2, ..OracleConfig::default() };
        assert!(exact_posterior_grid(&spec, &ev, 5, 0.01, &hidden).is_err());
        let strict = OracleConfig { tolerance: 0.0, ..OracleConfig::default() };
        assert!(matches!(
            exact_posterior_grid(&spec, &ev, 5, 0.01, &strict),
            Err(Error::OracleNonConvergence { .. })
        ));
        assert!(exact_posterior_grid(&spec, &ev, 5, 0.0, &OracleConfig::default()).is_err());
        assert_eq!(default_step(0.0, 2.0), 0.002);
    }
}
