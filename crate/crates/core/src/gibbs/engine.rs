use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctbn::{local_regimes, log_density, simulate_given, CtbnSpec, CtbnTrajectory};
use crate::error::{Error, Result};
use crate::markov::{lift_path, sample_index, LambdaPolicy};
use crate::mcmc::{sweep, KernelState, MoveContext, MoveSchedule, MoveStats};
use crate::scalar::Real;

use super::estimate::{Accumulator, Diagnostics, PosteriorEstimate, TimeGrid};
use super::evidence::Evidence;
use super::likelihood::ChildLikelihood;

/// Order in which hidden nodes are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scan {
    /// Every hidden node once, in index order.
    #[default]
    Systematic,
    /// As many uniformly drawn hidden nodes as there are hidden nodes.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    pub scan: Scan,
    /// Moves applied to every hidden node without an override.
    pub schedule: MoveSchedule,
    pub node_schedules: Vec<(usize, MoveSchedule)>,
    /// Total sweeps `m`, burn-in included.
    pub iterations: usize,
    /// Defaults to `iterations / 10`.
    pub burn_in: Option<usize>,
    pub thinning: usize,
    pub seed: u64,
    pub lambda: LambdaPolicy,
    pub grid_points: usize,
    /// Windowed likelihood deltas instead of full recomputation.
    pub incremental: bool,
    pub init_retries: usize,
    /// Forward samples drawn per start; one is kept with probability
    /// proportional to its importance weight. `1` keeps the first sample
    /// with positive density.
    pub init_candidates: usize,
    /// Number of batches for batch-means standard errors; 0 disables them.
    pub batches: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            scan: Scan::Systematic,
            schedule: MoveSchedule::default(),
            node_schedules: Vec::new(),
            iterations: 10_000,
            burn_in: None,
            thinning: 1,
            seed: 0,
            lambda: LambdaPolicy::default(),
            grid_points: 101,
            incremental: true,
            init_retries: 100,
            init_candidates: 1,
            batches: 20,
        }
    }
}

impl GibbsConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            seed,
            ..Self::default()
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in() {
            return Err(Error::InvalidConfig(format!(
                "iterations {} must exceed burn-in {}",
                self.iterations,
                self.burn_in()
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig("time grid needs at least 2 points".into()));
        }
        if !(self.lambda.multiplier >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda multiplier {} must be at least 1",
                self.lambda.multiplier
            )));
        }
        Ok(())
    }

    pub fn schedule_for(&self, v: usize) -> &MoveSchedule {
        self.node_schedules
            .iter()
            .find(|e| e.0 == v)
            .map_or(&self.schedule, |e| &e.1)
    }

    /// Post burn-in samples kept.
    pub fn sample_count(&self) -> usize {
        (self.iterations - self.burn_in()).div_ceil(self.thinning)
    }
}

/// Forward-samples the hidden nodes from their condition-by-intervention
/// dynamics given the evidence.
///
/// With one candidate, the first draw with positive joint density is
/// returned. With more, `candidates` draws are made and one is resampled in
/// proportion to its importance weight.
pub fn init_trajectory<T: Real, R: Rng>(
    spec: &CtbnSpec<T>,
    evidence: &Evidence<T>,
    retries: usize,
    candidates: usize,
    rng: &mut R,
) -> Result<CtbnTrajectory<T>> {
    let (t_min, t_max) = evidence.interval();
    for _ in 0..retries.max(1) {
        if candidates <= 1 {
            let traj = simulate_given(spec, evidence.paths(), t_min, t_max, rng)?;
            if log_density(spec, &traj).is_finite() {
                return Ok(traj);
            }
            continue;
        }
        let mut pool = Vec::with_capacity(candidates);
        let mut weights = Vec::with_capacity(candidates);
        for _ in 0..candidates {
            let traj = simulate_given(spec, evidence.paths(), t_min, t_max, rng)?;
            weights.push(evidence.log_weight(spec, &traj)?.as_f64());
            pool.push(traj);
        }
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            continue;
        }
        let probs: Vec<f64> = weights.iter().map(|w| (w - max).exp()).collect();
        let k = sample_index(rng, &probs).expect("a positive weight");
        let traj = pool.swap_remove(k);
        if log_density(spec, &traj).is_finite() {
            return Ok(traj);
        }
    }
    Err(Error::Initialization {
        attempts: retries.max(1),
    })
}

/// Updates the path of node `v` given all other paths.
///
/// The current path is lifted to a marked path by drawing its virtual
/// points under the local regimes, the scheduled moves run on it, and the
/// result is collapsed back. Returns `false` when the new path would jump
/// together with another node and the old one was kept.
#[allow(clippy::too_many_arguments)]
pub fn update_node<T: Real, R: Rng>(
    spec: &CtbnSpec<T>,
    traj: &mut CtbnTrajectory<T>,
    v: usize,
    schedule: &MoveSchedule,
    policy: LambdaPolicy,
    incremental: bool,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<bool> {
    let regimes = local_regimes(spec, v, traj, policy)?;
    let initial = spec.node_initial(v, &traj.initial_state());
    let lifted = lift_path(traj.path(v), &regimes, rng);
    let path = {
        let likelihood = ChildLikelihood::new(spec, traj, v);
        let ctx = MoveContext {
            regimes: &regimes,
            initial: &initial,
            likelihood: &likelihood,
            incremental,
        };
        let mut state = KernelState::new(lifted, &ctx);
        sweep(&mut state, schedule, &ctx, stats, rng);
        state.path().collapse()
    };
    if traj.clashes(v, &path) {
        return Ok(false);
    }
    traj.replace(v, path)?;
    Ok(true)
}

/// One Gibbs sweep over the hidden nodes. Observed nodes are never touched.
pub fn gibbs_sweep<T: Real, R: Rng>(
    spec: &CtbnSpec<T>,
    traj: &mut CtbnTrajectory<T>,
    evidence: &Evidence<T>,
    config: &GibbsConfig,
    diagnostics: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let hidden = evidence.hidden_nodes();
    if hidden.is_empty() {
        return Ok(());
    }
    if diagnostics.node_moves.is_empty() {
        diagnostics.node_moves = hidden.iter().map(|&v| (v, MoveStats::default())).collect();
    }
    for step in 0..hidden.len() {
        let k = match config.scan {
            Scan::Systematic => step,
            Scan::Random => rng.random_range(0..hidden.len()),
        };
        let v = hidden[k];
        let mut stats = MoveStats::default();
        let kept = update_node(
            spec,
            traj,
            v,
            config.schedule_for(v),
            config.lambda,
            config.incremental,
            &mut stats,
            rng,
        )?;
        if !kept {
            diagnostics.clashes += 1;
        }
        diagnostics.moves.merge(&stats);
        diagnostics.node_moves[k].1.merge(&stats);
    }
    Ok(())
}

/// A single Markov chain over hidden trajectories.
pub struct Chain<'a, T> {
    spec: &'a CtbnSpec<T>,
    evidence: &'a Evidence<T>,
    config: &'a GibbsConfig,
    traj: CtbnTrajectory<T>,
    rng: ChaCha8Rng,
    diagnostics: Diagnostics,
}

impl<'a, T: Real> Chain<'a, T> {
    pub fn new(spec: &'a CtbnSpec<T>, evidence: &'a Evidence<T>, config: &'a GibbsConfig) -> Result<Self> {
        Self::with_seed(spec, evidence, config, config.seed)
    }

    pub fn with_seed(spec: &'a CtbnSpec<T>, evidence: &'a Evidence<T>, config: &'a GibbsConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if evidence.paths().len() != spec.node_count() {
            return Err(Error::InvalidEvidence("evidence is for a different network".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = init_trajectory(spec, evidence, config.init_retries, config.init_candidates, &mut rng)?;
        Self::start(spec, evidence, config, traj, rng)
    }

    /// Starts from a given trajectory, which must agree with the evidence
    /// and have positive density.
    pub fn from_trajectory(
        spec: &'a CtbnSpec<T>,
        evidence: &'a Evidence<T>,
        config: &'a GibbsConfig,
        traj: CtbnTrajectory<T>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        traj.check_against(spec)?;
        if evidence.paths().len() != spec.node_count() {
            return Err(Error::InvalidEvidence("evidence is for a different network".into()));
        }
        for v in evidence.observed_nodes() {
            if evidence.path(v) != Some(traj.path(v)) {
                return Err(Error::InvalidEvidence(format!("trajectory disagrees with the evidence on node {v}")));
            }
        }
        if !log_density(spec, &traj).is_finite() {
            return Err(Error::Initialization { attempts: 0 });
        }
        Self::start(spec, evidence, config, traj, ChaCha8Rng::seed_from_u64(seed))
    }

    fn start(
        spec: &'a CtbnSpec<T>,
        evidence: &'a Evidence<T>,
        config: &'a GibbsConfig,
        traj: CtbnTrajectory<T>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            spec,
            evidence,
            config,
            traj,
            rng,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let start = Instant::now();
        gibbs_sweep(
            self.spec,
            &mut self.traj,
            self.evidence,
            self.config,
            &mut self.diagnostics,
            &mut self.rng,
        )?;
        self.diagnostics.sweep_seconds += start.elapsed().as_secs_f64();
        self.diagnostics.sweeps += 1;
        Ok(())
    }

    pub fn trajectory(&self) -> &CtbnTrajectory<T> {
        &self.traj
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Runs the configured sweeps, calling `observe` on every retained
    /// sample.
    pub fn run_with(&mut self, mut observe: impl FnMut(&CtbnTrajectory<T>)) -> Result<()> {
        let burn_in = self.config.burn_in();
        for m in 0..self.config.iterations {
            self.step()?;
            if m >= burn_in && (m - burn_in).is_multiple_of(self.config.thinning) {
                self.diagnostics.samples += 1;
                observe(&self.traj);
            }
        }
        Ok(())
    }
}

fn run_chain<T: Real>(
    spec: &CtbnSpec<T>,
    evidence: &Evidence<T>,
    config: &GibbsConfig,
    grid: &TimeGrid<T>,
    seed: u64,
) -> Result<(Accumulator, Diagnostics)> {
    let hidden = evidence.hidden_nodes();
    let sizes = hidden.iter().map(|&v| spec.alphabet_size(v)).collect();
    let batch_len = if config.batches > 0 {
        config.sample_count() / config.batches
    } else {
        0
    };
    let mut acc = Accumulator::new(hidden, sizes, grid.len(), batch_len);
    let mut chain = Chain::with_seed(spec, evidence, config, seed)?;
    chain.run_with(|traj| acc.add(grid, traj))?;
    Ok((acc, chain.diagnostics))
}

fn finish<T: Real>(grid: TimeGrid<T>, acc: Accumulator, chains: Vec<Diagnostics>) -> PosteriorEstimate<T> {
    let mut diagnostics = Diagnostics::default();
    for d in &chains {
        diagnostics.moves.merge(&d.moves);
        for (v, s) in &d.node_moves {
            match diagnostics.node_moves.iter_mut().find(|e| e.0 == *v) {
                Some(e) => e.1.merge(s),
                None => diagnostics.node_moves.push((*v, s.clone())),
            }
        }
        diagnostics.sweeps += d.sweeps;
        diagnostics.samples += d.samples;
        diagnostics.sweep_seconds += d.sweep_seconds;
        diagnostics.clashes += d.clashes;
    }
    PosteriorEstimate {
        grid,
        nodes: acc.nodes.clone(),
        probabilities: acc.probabilities(),
        std_errors: acc.std_errors(),
        samples: acc.samples,
        diagnostics,
        chains,
    }
}

/// Runs one chain and returns the empirical grid marginals of the hidden
/// nodes over the retained sweeps.
pub fn run<T: Real>(spec: &CtbnSpec<T>, evidence: &Evidence<T>, config: &GibbsConfig) -> Result<PosteriorEstimate<T>> {
    run_chains(spec, evidence, config, 1)
}

/// Runs `chains` independent chains on separate threads, seeded
/// `seed, seed + 1, ...`, and pools their samples.
pub fn run_chains<T: Real>(
    spec: &CtbnSpec<T>,
    evidence: &Evidence<T>,
    config: &GibbsConfig,
    chains: usize,
) -> Result<PosteriorEstimate<T>> {
    config.validate()?;
    let (t_min, t_max) = evidence.interval();
    let grid = TimeGrid::equispaced(t_min, t_max, config.grid_points)?;
    let chains = chains.max(1);
    let results: Vec<Result<(Accumulator, Diagnostics)>> = if chains == 1 {
        vec![run_chain(spec, evidence, config, &grid, config.seed)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..chains)
                .map(|c| {
                    let grid = &grid;
                    let seed = config.seed.wrapping_add(c as u64);
                    s.spawn(move || run_chain(spec, evidence, config, grid, seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    };
    let mut pooled: Option<Accumulator> = None;
    let mut diags = Vec::with_capacity(chains);
    for r in results {
        let (acc, d) = r?;
        match pooled.as_mut() {
            Some(p) => p.merge(&acc),
            None => pooled = Some(acc),
        }
        diags.push(d);
    }
    Ok(finish(grid, pooled.expect("at least one chain"), diags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctbn::simulate;
    use crate::markov::SamplePath;
    use crate::testing::{cycle, example1, node, q, uniform_initial};

    fn observed_y(spec: &CtbnSpec<f64>, seed: u64) -> Evidence<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = simulate(spec, 0.0, 1.0, &mut rng).unwrap();
        Evidence::new(spec, 0.0, 1.0, vec![(1, tr.path(1).clone())]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(GibbsConfig::new(100, 0).validate().is_ok());
        assert_eq!(GibbsConfig::new(100, 0).burn_in(), 10);
        assert_eq!(GibbsConfig::new(100, 0).sample_count(), 90);
        let thin = GibbsConfig { thinning: 4, ..GibbsConfig::new(100, 0) };
        assert_eq!(thin.sample_count(), 23);
        assert!(GibbsConfig { burn_in: Some(100), ..GibbsConfig::new(100, 0) }.validate().is_err());
        assert!(GibbsConfig { thinning: 0, ..GibbsConfig::new(100, 0) }.validate().is_err());
        assert!(GibbsConfig { grid_points: 1, ..GibbsConfig::new(100, 0) }.validate().is_err());
        let low = GibbsConfig { lambda: LambdaPolicy { multiplier: 0.5, ..LambdaPolicy::default() }, ..GibbsConfig::new(100, 0) };
        assert!(low.validate().is_err());
    }

    #[test]
    fn node_schedules_override() {
        let mut config = GibbsConfig::new(10, 0);
        let special = MoveSchedule::default().scaled(3);
        config.node_schedules.push((1, special.clone()));
        assert_eq!(config.schedule_for(1), &special);
        assert_eq!(config.schedule_for(0), &config.schedule);
    }

    #[test]
    fn initial_trajectory_respects_evidence() {
        let spec = example1();
        let ev = observed_y(&spec, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for candidates in [1, 50] {
            let tr = init_trajectory(&spec, &ev, 100, candidates, &mut rng).unwrap();
            assert_eq!(tr.path(1), ev.path(1).unwrap());
            assert!(log_density(&spec, &tr).is_finite());
        }
        let empty = Evidence::empty(&spec, 0.0, 1.0).unwrap();
        assert!(init_trajectory(&spec, &empty, 1, 1, &mut rng).is_ok());
    }

    #[test]
    fn fully_observed_chain_is_constant() {
        let spec = example1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tr = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(0, tr.path(0).clone()), (1, tr.path(1).clone())]).unwrap();
        let config = GibbsConfig::new(20, 0);
        let mut chain = Chain::new(&spec, &ev, &config).unwrap();
        assert_eq!(chain.trajectory(), &tr);
        for _ in 0..5 {
            chain.step().unwrap();
        }
        assert_eq!(chain.trajectory(), &tr);
        assert_eq!(chain.diagnostics().moves.overall_acceptance(), None);
    }

    #[test]
    fn sweeps_never_touch_observed_paths() {
        let spec = cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tr = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(1, tr.path(1).clone())]).unwrap();
        let config = GibbsConfig::new(50, 5);
        let mut chain = Chain::new(&spec, &ev, &config).unwrap();
        for _ in 0..50 {
            chain.step().unwrap();
            assert_eq!(chain.trajectory().path(1), tr.path(1));
            assert!(log_density(&spec, chain.trajectory()).is_finite());
        }
        assert_eq!(chain.diagnostics().sweeps, 50);
        assert_eq!(chain.diagnostics().node_moves.len(), 2);
    }

    #[test]
    fn from_trajectory_checks_its_input() {
        let spec = example1();
        let ev = observed_y(&spec, 5);
        let config = GibbsConfig::new(10, 0);
        let good = CtbnTrajectory::new(vec![SamplePath::constant(0.0, 1.0, 0), ev.path(1).unwrap().clone()]).unwrap();
        assert!(Chain::from_trajectory(&spec, &ev, &config, good, 0).is_ok());
        let wrong = CtbnTrajectory::new(vec![SamplePath::constant(0.0, 1.0, 0), SamplePath::constant(0.0, 1.0, 0)]).unwrap();
        if ev.path(1).unwrap().jump_count() > 0 {
            assert!(Chain::from_trajectory(&spec, &ev, &config, wrong, 0).is_err());
        }
        let bad = GibbsConfig { burn_in: Some(10), ..GibbsConfig::new(10, 0) };
        assert!(Chain::new(&spec, &ev, &bad).is_err());
    }

    #[test]
    fn run_is_deterministic_and_normalized() {
        let spec = example1();
        let ev = observed_y(&spec, 6);
        let config = GibbsConfig { grid_points: 11, ..GibbsConfig::new(200, 9) };
        let a = run(&spec, &ev, &config).unwrap();
        let b = run(&spec, &ev, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nodes, vec![0]);
        assert_eq!(a.samples, 180);
        for row in &a.probabilities[0] {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let c = run(&spec, &ev, &GibbsConfig { seed: 10, ..config.clone() }).unwrap();
        assert_ne!(a.probabilities, c.probabilities);
    }

    #[test]
    fn single_sample_gives_indicators() {
        let spec = example1();
        let ev = observed_y(&spec, 7);
        let config = GibbsConfig { burn_in: Some(4), grid_points: 21, ..GibbsConfig::new(5, 1) };
        let est = run(&spec, &ev, &config).unwrap();
        assert_eq!(est.samples, 1);
        for row in &est.probabilities[0] {
            assert!(row.iter().all(|&p| p == 0.0 || p == 1.0));
        }
        let mut chain = Chain::new(&spec, &ev, &config).unwrap();
        let mut last = None;
        chain.run_with(|t| last = Some(t.clone())).unwrap();
        let states = est.grid.states_of(last.unwrap().path(0));
        for (g, &a) in states.iter().enumerate() {
            assert_eq!(est.probabilities[0][g][a], 1.0);
        }
    }

    #[test]
    fn pooled_chains() {
        let spec = example1();
        let ev = observed_y(&spec, 8);
        let config = GibbsConfig { grid_points: 11, ..GibbsConfig::new(100, 3) };
        let est = run_chains(&spec, &ev, &config, 3).unwrap();
        assert_eq!(est.samples, 270);
        assert_eq!(est.chains.len(), 3);
        assert_eq!(est.diagnostics.sweeps, 300);
        let one = run_chains(&spec, &ev, &GibbsConfig { seed: 4, ..config.clone() }, 1).unwrap();
        assert_eq!(one.chains[0].moves, est.chains[1].moves);
    }

    #[test]
    fn uninformative_child_leaves_the_prior_marginal() {
        // Y moves the same way whatever X is, so observing Y says nothing.
        let x = node("X", 2, vec![], vec![q(&[&[-4.0, 4.0], &[5.0, -5.0]])]);
        let flat = q(&[&[-3.0, 3.0], &[3.0, -3.0]]);
        let y = node("Y", 2, vec![0], vec![flat.clone(), flat]);
        let spec = CtbnSpec::new(vec![x, y], uniform_initial(&[2, 2])).unwrap();
        let ev = observed_y(&spec, 9);
        let config = GibbsConfig { grid_points: 21, ..GibbsConfig::new(20_000, 11) };
        let est = run(&spec, &ev, &config).unwrap();
        let mad: f64 = est
            .grid
            .points()
            .iter()
            .zip(est.series(0, 0).unwrap())
            .map(|(&t, p)| (p - (5.0 / 9.0 - (1.0 / 18.0) * (-9.0 * t).exp())).abs())
            .sum::<f64>()
            / 21.0;
        assert!(mad < 0.02, "mad {mad}");
    }
}
