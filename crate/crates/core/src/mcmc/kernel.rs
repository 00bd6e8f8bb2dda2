use rand::Rng;

use crate::error::{Error, Result};
use crate::markov::{log_density_marked_piecewise, MarkedPath, RegimePartition};
use crate::scalar::Real;

use super::likelihood::LikelihoodEvaluator;
use super::moves::{
    log_prior_range, propose, ChangeTimeVariant, DimensionVariant, Edit, MoveKind, MoveLabel, Proposal, TimeScope,
};

/// Everything a move needs besides the path itself.
pub struct MoveContext<'a, T> {
    pub regimes: &'a RegimePartition<T>,
    /// Initial law of the skeleton state `x_0`.
    pub initial: &'a [T],
    pub likelihood: &'a dyn LikelihoodEvaluator<T>,
    /// Use windowed likelihood deltas when the evaluator offers them.
    pub incremental: bool,
}

impl<'a, T: Real> MoveContext<'a, T> {
    pub fn new(regimes: &'a RegimePartition<T>, initial: &'a [T], likelihood: &'a dyn LikelihoodEvaluator<T>) -> Self {
        Self {
            regimes,
            initial,
            likelihood,
            incremental: true,
        }
    }

    pub fn log_prior(&self, path: &MarkedPath<T>) -> T {
        log_density_marked_piecewise(path, self.regimes, self.initial)
    }
}

/// Current marked path with cached prior and likelihood values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelState<T> {
    path: MarkedPath<T>,
    cached_loglik: T,
    cached_logprior: T,
}

impl<T: Real> KernelState<T> {
    pub fn new(path: MarkedPath<T>, ctx: &MoveContext<'_, T>) -> Self {
        let cached_logprior = ctx.log_prior(&path);
        let cached_loglik = ctx.likelihood.log_likelihood(&path);
        Self {
            path,
            cached_loglik,
            cached_logprior,
        }
    }

    pub fn path(&self) -> &MarkedPath<T> {
        &self.path
    }

    pub fn into_path(self) -> MarkedPath<T> {
        self.path
    }

    pub fn log_likelihood(&self) -> T {
        self.cached_loglik
    }

    pub fn log_prior(&self) -> T {
        self.cached_logprior
    }

    pub fn log_target(&self) -> T {
        self.cached_logprior + self.cached_loglik
    }

    /// Largest absolute gap between the caches and a fresh evaluation.
    pub fn cache_error(&self, ctx: &MoveContext<'_, T>) -> T {
        let prior = (ctx.log_prior(&self.path) - self.cached_logprior).abs();
        let lik = (ctx.likelihood.log_likelihood(&self.path) - self.cached_loglik).abs();
        prior.max(lik)
    }

    /// Recomputes both caches from scratch.
    pub fn refresh(&mut self, ctx: &MoveContext<'_, T>) {
        self.cached_logprior = ctx.log_prior(&self.path);
        self.cached_loglik = ctx.likelihood.log_likelihood(&self.path);
    }
}

/// Components of the log acceptance ratio of one proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRatio<T> {
    pub delta_prior: T,
    pub delta_likelihood: T,
    pub log_q_ratio: T,
}

impl<T: Real> LogRatio<T> {
    pub fn total(&self) -> T {
        self.delta_prior + self.delta_likelihood + self.log_q_ratio
    }
}

/// Applies the edit, evaluates the ratio components and returns the undo.
fn evaluate<T: Real>(state: &mut KernelState<T>, edit: Edit<T>, log_q_ratio: T, ctx: &MoveContext<'_, T>) -> (LogRatio<T>, Edit<T>) {
    let (before, after) = edit.prior_ranges(&state.path);
    let (lo, hi) = edit.window(&state.path);
    let prior_old = log_prior_range(&state.path, ctx.regimes, ctx.initial, before);
    let lik_old = if ctx.incremental {
        ctx.likelihood.log_likelihood_window(&state.path, lo, hi)
    } else {
        None
    };
    let undo = edit.apply(&mut state.path);
    let prior_new = log_prior_range(&state.path, ctx.regimes, ctx.initial, after);
    let delta_likelihood = match lik_old {
        Some(old) => {
            let new = ctx
                .likelihood
                .log_likelihood_window(&state.path, lo, hi)
                .expect("evaluator offers windows consistently");
            new - old
        }
        None => ctx.likelihood.log_likelihood(&state.path) - state.cached_loglik,
    };
    (
        LogRatio {
            delta_prior: prior_new - prior_old,
            delta_likelihood,
            log_q_ratio,
        },
        undo,
    )
}

/// Log acceptance ratio of `proposal` from `state`, leaving `state` as it was.
pub fn log_acceptance_ratio<T: Real>(state: &mut KernelState<T>, proposal: &Proposal<T>, ctx: &MoveContext<'_, T>) -> LogRatio<T> {
    if proposal.is_identity() {
        return LogRatio {
            delta_prior: T::zero(),
            delta_likelihood: T::zero(),
            log_q_ratio: T::zero(),
        };
    }
    let (ratio, undo) = evaluate(state, proposal.edit.clone(), proposal.log_q_ratio, ctx);
    undo.apply(&mut state.path);
    ratio
}

/// Result of one Metropolis-Hastings step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Rejected,
    /// Identity proposal by construction; excluded from acceptance rates.
    NoOp,
    /// Non-finite ratio or degenerate proposal; rejected.
    Flagged,
}

/// Proposal and acceptance counts of one move.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub proposed: u64,
    pub accepted: u64,
    pub noop: u64,
    pub flagged: u64,
}

impl MoveCounts {
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Per-move diagnostics of a chain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MoveStats {
    counts: [MoveCounts; 6],
}

impl MoveStats {
    pub fn record(&mut self, label: MoveLabel, outcome: Outcome) {
        let c = &mut self.counts[label.index()];
        match outcome {
            Outcome::Accepted => {
                c.proposed += 1;
                c.accepted += 1;
            }
            Outcome::Rejected => c.proposed += 1,
            Outcome::NoOp => c.noop += 1,
            Outcome::Flagged => {
                c.proposed += 1;
                c.flagged += 1;
            }
        }
    }

    pub fn get(&self, label: MoveLabel) -> MoveCounts {
        self.counts[label.index()]
    }

    pub fn merge(&mut self, other: &MoveStats) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.proposed += b.proposed;
            a.accepted += b.accepted;
            a.noop += b.noop;
            a.flagged += b.flagged;
        }
    }

    pub fn total(&self) -> MoveCounts {
        let mut t = MoveCounts::default();
        for c in &self.counts {
            t.proposed += c.proposed;
            t.accepted += c.accepted;
            t.noop += c.noop;
            t.flagged += c.flagged;
        }
        t
    }

    /// Accepted over proposed across all moves, no-ops excluded.
    pub fn overall_acceptance(&self) -> Option<f64> {
        self.total().acceptance_rate()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MoveLabel, MoveCounts)> + '_ {
        MoveLabel::ALL.iter().map(|&l| (l, self.counts[l.index()]))
    }
}

/// Metropolis-Hastings step: applies `proposal` with probability
/// `min(1, exp(log ratio))` and otherwise leaves `state` untouched.
pub fn mh_step<T: Real, R: Rng + ?Sized>(
    state: &mut KernelState<T>,
    proposal: Proposal<T>,
    ctx: &MoveContext<'_, T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Outcome {
    let label = proposal.label;
    let outcome = if proposal.flag.is_some() {
        Outcome::Flagged
    } else if proposal.is_identity() {
        Outcome::NoOp
    } else {
        let (ratio, undo) = evaluate(state, proposal.edit, proposal.log_q_ratio, ctx);
        let log_a = ratio.total();
        let u: f64 = rng.random();
        let outcome = if log_a.is_nan() || log_a == T::infinity() {
            Outcome::Flagged
        } else if T::lit(u).ln() < log_a {
            Outcome::Accepted
        } else {
            Outcome::Rejected
        };
        if outcome == Outcome::Accepted {
            state.cached_logprior += ratio.delta_prior;
            state.cached_loglik += ratio.delta_likelihood;
        } else {
            undo.apply(&mut state.path);
        }
        outcome
    };
    stats.record(label, outcome);
    outcome
}

/// Ordered moves with per-sweep repetition counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveSchedule {
    entries: Vec<(MoveKind, usize)>,
}

impl MoveSchedule {
    /// Fails when empty or when no dimension-changing move is scheduled.
    pub fn new(entries: Vec<(MoveKind, usize)>) -> Result<Self> {
        if entries.iter().all(|e| e.1 == 0) {
            return Err(Error::InvalidConfig("move schedule is empty".into()));
        }
        if !entries.iter().any(|e| e.0.is_dimension() && e.1 > 0) {
            return Err(Error::InvalidConfig(
                "move schedule needs a dimension-changing move".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// `ChangeTime`, `ChangeState` and one dimension move, each `reps` times.
    pub fn standard(reps: usize) -> Self {
        Self::with_variants(reps, ChangeTimeVariant::SinglePoint, TimeScope::Global, DimensionVariant::default())
    }

    pub fn with_variants(reps: usize, variant: ChangeTimeVariant, scope: TimeScope, dimension: DimensionVariant) -> Self {
        let reps = reps.max(1);
        Self {
            entries: vec![
                (MoveKind::ChangeTime { variant, scope }, reps),
                (MoveKind::ChangeState, reps),
                (MoveKind::Dimension(dimension), reps),
            ],
        }
    }

    pub fn entries(&self) -> &[(MoveKind, usize)] {
        &self.entries
    }

    /// Same kinds with every repetition count multiplied by `factor`.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            entries: self.entries.iter().map(|&(k, r)| (k, r * factor.max(1))).collect(),
        }
    }
}

impl Default for MoveSchedule {
    fn default() -> Self {
        Self::standard(1)
    }
}

/// Runs every scheduled move once per repetition, cyclically.
pub fn sweep<T: Real, R: Rng + ?Sized>(
    state: &mut KernelState<T>,
    schedule: &MoveSchedule,
    ctx: &MoveContext<'_, T>,
    stats: &mut MoveStats,
    rng: &mut R,
) {
    let rounds = schedule.entries.iter().map(|e| e.1).max().unwrap_or(0);
    for r in 0..rounds {
        for &(kind, reps) in &schedule.entries {
            if r < reps {
                let proposal = propose(kind, &state.path, ctx.regimes, ctx.initial, rng);
                mh_step(state, proposal, ctx, stats, rng);
            }
        }
    }
}
