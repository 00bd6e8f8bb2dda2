use crate::error::{Error, Result};
use crate::markov::MarkedPath;
use crate::scalar::{ln0, Real};

use super::kernel::{log_acceptance_ratio, KernelState, MoveContext};
use super::moves::{
    add_random_point_at, add_virtual_point_at, change_state_at, change_time_at, erase_random_point_at,
    erase_virtual_point_at, resample_times_at, Proposal, TimeScope,
};

/// A concrete forward move from a given path.
#[derive(Debug, Clone, PartialEq)]
pub enum MovePair<T> {
    ChangeTime { index: usize, time: T, scope: TimeScope },
    ResampleTimes { times: Vec<T>, scope: TimeScope },
    ChangeState { index: usize, state: usize },
    AddRandomPoint { time: T, state: usize, bridge: bool },
    EraseRandomPoint { index: usize, bridge: bool },
    AddVirtualPoint { time: T },
    EraseVirtualPoint { index: usize },
}

impl<T: Real> MovePair<T> {
    /// The kernel's own proposal for this move.
    pub fn proposal(&self, path: &MarkedPath<T>, ctx: &MoveContext<'_, T>) -> Result<Proposal<T>> {
        let regimes = ctx.regimes;
        match self {
            MovePair::ChangeTime { index, time, scope } => change_time_at(path, regimes, *index, *time, *scope),
            MovePair::ResampleTimes { times, scope } => resample_times_at(path, regimes, times.clone(), *scope),
            MovePair::ChangeState { index, state } => change_state_at(path, regimes, ctx.initial, *index, *state),
            MovePair::AddRandomPoint { time, state, bridge } => {
                add_random_point_at(path, regimes, *time, *state, *bridge)
            }
            MovePair::EraseRandomPoint { index, bridge } => erase_random_point_at(path, regimes, *index, *bridge),
            MovePair::AddVirtualPoint { time } => add_virtual_point_at(path, *time),
            MovePair::EraseVirtualPoint { index } => erase_virtual_point_at(path, *index),
        }
    }

    /// The move leading back from `to`, the result of `self` on `from`.
    pub fn reverse(&self, from: &MarkedPath<T>, to: &MarkedPath<T>) -> MovePair<T> {
        match self {
            MovePair::ChangeTime { index, scope, .. } => MovePair::ChangeTime {
                index: *index,
                time: from.anchor(*index),
                scope: *scope,
            },
            MovePair::ResampleTimes { scope, .. } => MovePair::ResampleTimes {
                times: from.times().to_vec(),
                scope: *scope,
            },
            MovePair::ChangeState { index, .. } => MovePair::ChangeState {
                index: *index,
                state: from.states()[*index],
            },
            MovePair::AddRandomPoint { time, bridge, .. } => MovePair::EraseRandomPoint {
                index: to.index_at(*time),
                bridge: *bridge,
            },
            MovePair::EraseRandomPoint { index, bridge } => MovePair::AddRandomPoint {
                time: from.anchor(*index),
                state: from.states()[*index],
                bridge: *bridge,
            },
            MovePair::AddVirtualPoint { time } => MovePair::EraseVirtualPoint {
                index: to.index_at(*time),
            },
            MovePair::EraseVirtualPoint { index } => MovePair::AddVirtualPoint {
                time: from.anchor(*index),
            },
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Index of the single point whose time differs.
fn moved_index<T: Real>(from: &MarkedPath<T>, to: &MarkedPath<T>) -> Option<usize> {
    if from.len() != to.len() || from.states() != to.states() {
        return None;
    }
    let diffs: Vec<usize> = (0..from.len()).filter(|&k| from.times()[k] != to.times()[k]).collect();
    (diffs.len() == 1).then(|| diffs[0] + 1)
}

/// Index of the point present in `longer` but not in `shorter`.
fn inserted_index<T: Real>(shorter: &MarkedPath<T>, longer: &MarkedPath<T>) -> Option<usize> {
    if longer.len() != shorter.len() + 1 {
        return None;
    }
    let k = (0..shorter.len())
        .find(|&k| shorter.times()[k] != longer.times()[k])
        .unwrap_or(shorter.len());
    let mut check = longer.clone();
    check.remove(k + 1);
    (check == *shorter).then_some(k + 1)
}

/// Skeleton probability at time `t` computed from the generator.
fn skeleton<T: Real>(ctx: &MoveContext<'_, T>, t: T, a: usize, b: usize) -> T {
    let j = ctx.regimes.regime_at(t);
    let lambda = ctx.regimes.lambda(j);
    let q = ctx.regimes.intensity(j);
    if a == b {
        T::one() - q.total_rate(a) / lambda
    } else {
        q.rate(a, b) / lambda
    }
}

/// `log q(from -> to)` of the forward move, computed from the two paths.
pub fn proposal_log_density<T: Real>(
    pair: &MovePair<T>,
    from: &MarkedPath<T>,
    to: &MarkedPath<T>,
    ctx: &MoveContext<'_, T>,
) -> Result<T> {
    let fail = || Error::Unreachable("paths are not connected by this move".into());
    let half = T::lit(0.5).ln();
    let duration = from.duration();
    let n = from.len();
    match pair {
        MovePair::ChangeTime { scope, .. } => {
            let i = moved_index(from, to).ok_or_else(fail)?;
            let mut lo = from.anchor(i - 1);
            let mut hi = from.anchor(i + 1);
            if *scope == TimeScope::PerRegime {
                let j = ctx.regimes.regime_at(from.anchor(i));
                let (rlo, rhi) = ctx.regimes.bounds(j);
                lo = lo.max(rlo);
                hi = hi.min(rhi);
            }
            Ok(-T::from_count(n).ln() - (hi - lo).ln())
        }
        MovePair::ResampleTimes { scope, .. } => {
            if from.states() != to.states() {
                return Err(fail());
            }
            match scope {
                TimeScope::Global => Ok(T::lit(ln_factorial(n)) - T::from_count(n) * duration.ln()),
                TimeScope::PerRegime => {
                    let mut total = T::zero();
                    for j in 0..ctx.regimes.count() {
                        let (lo, hi) = ctx.regimes.bounds(j);
                        let c = to.times().iter().filter(|&&t| t >= lo && t < hi).count();
                        total += T::lit(ln_factorial(c)) - T::from_count(c) * (hi - lo).ln();
                    }
                    Ok(total)
                }
            }
        }
        MovePair::ChangeState { .. } => {
            if from.times() != to.times() {
                return Err(fail());
            }
            let diffs: Vec<usize> = (0..=n).filter(|&k| from.states()[k] != to.states()[k]).collect();
            let [i] = diffs[..] else {
                return Err(fail());
            };
            let weight = |x: usize| {
                let mut w = if i == 0 {
                    ctx.initial[x]
                } else {
                    skeleton(ctx, from.anchor(i), from.states()[i - 1], x)
                };
                if i < n {
                    w *= skeleton(ctx, from.anchor(i + 1), x, from.states()[i + 1]);
                }
                w
            };
            let total: T = (0..ctx.regimes.size()).map(weight).sum();
            Ok(-T::from_count(n + 1).ln() + ln0(weight(to.states()[i])) - total.ln())
        }
        MovePair::AddRandomPoint { bridge, .. } => {
            let k = inserted_index(from, to).ok_or_else(fail)?;
            let t = to.anchor(k);
            let pred = to.states()[k - 1];
            let x = to.states()[k];
            let mut p = skeleton(ctx, t, pred, x);
            if *bridge && k <= n {
                let (ts, xs) = (to.anchor(k + 1), to.states()[k + 1]);
                let weight = |y: usize| skeleton(ctx, t, pred, y) * skeleton(ctx, ts, y, xs);
                let total: T = (0..ctx.regimes.size()).map(weight).sum();
                p = weight(x) / total;
            }
            Ok(half - duration.ln() + ln0(p))
        }
        MovePair::EraseRandomPoint { .. } => {
            inserted_index(to, from).ok_or_else(fail)?;
            Ok(half - T::from_count(n).ln())
        }
        MovePair::AddVirtualPoint { .. } => {
            let k = inserted_index(from, to).ok_or_else(fail)?;
            if to.states()[k] != to.states()[k - 1] {
                return Err(fail());
            }
            Ok(half - duration.ln())
        }
        MovePair::EraseVirtualPoint { .. } => {
            let k = inserted_index(to, from).ok_or_else(fail)?;
            if from.states()[k] != from.states()[k - 1] {
                return Err(fail());
            }
            let virtuals = (1..=n).filter(|&i| from.states()[i] == from.states()[i - 1]).count();
            Ok(half - T::from_count(virtuals).ln())
        }
    }
}

/// Outcome of a detailed-balance check on one pair of paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport<T> {
    /// `|log(pi L q a)(x, x') - log(pi L q a)(x', x)|`.
    pub residual: T,
    /// Gap between the kernel's log ratio and the one formed from
    /// independently evaluated densities.
    pub ratio_error: T,
    pub forward_log_ratio: T,
    pub reverse_log_ratio: T,
}

impl<T: Real> BalanceReport<T> {
    pub fn worst(&self) -> T {
        self.residual.max(self.ratio_error)
    }
}

/// Checks `pi(x) q(x, x') a(x, x') = pi(x') q(x', x) a(x', x)` for the pair
/// produced by `pair` from `path`, using full prior and likelihood
/// evaluations and independently computed proposal densities.
pub fn balance_check<T: Real>(path: &MarkedPath<T>, pair: &MovePair<T>, ctx: &MoveContext<'_, T>) -> Result<BalanceReport<T>> {
    let forward = pair.proposal(path, ctx)?;
    let mut to = path.clone();
    forward.edit.clone().apply(&mut to);
    let back = pair.reverse(path, &to);
    let reverse = back.proposal(&to, ctx)?;

    let mut state_x = KernelState::new(path.clone(), ctx);
    let mut state_y = KernelState::new(to.clone(), ctx);
    let kf = log_acceptance_ratio(&mut state_x, &forward, ctx).total();
    let kr = log_acceptance_ratio(&mut state_y, &reverse, ctx).total();

    let target = |p: &MarkedPath<T>| ctx.log_prior(p) + ctx.likelihood.log_likelihood(p);
    let (lx, ly) = (target(path), target(&to));
    let qf = proposal_log_density(pair, path, &to, ctx)?;
    let qr = proposal_log_density(&back, &to, path, ctx)?;
    if !(lx.is_finite() && ly.is_finite() && qf.is_finite() && qr.is_finite()) {
        return Err(Error::Unreachable("pair has zero density in one direction".into()));
    }
    let lhs = lx + qf + kf.min(T::zero());
    let rhs = ly + qr + kr.min(T::zero());
    let independent = ly + qr - lx - qf;
    Ok(BalanceReport {
        residual: (lhs - rhs).abs(),
        ratio_error: (kf - independent).abs().max((kr + independent).abs()),
        forward_log_ratio: kf,
        reverse_log_ratio: kr,
    })
}
