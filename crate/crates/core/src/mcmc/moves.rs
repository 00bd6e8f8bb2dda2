use rand::Rng;

use crate::error::{Error, Result};
use crate::markov::{sample_index, sorted_uniforms, MarkedPath, PathView, RegimePartition};
use crate::scalar::{ln0, uniform_open, Real};

/// Which points a `ChangeTime` move resamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChangeTimeVariant {
    /// One point, between its neighbours.
    #[default]
    SinglePoint,
    /// Every point at once.
    FullResample,
}

/// Whether resampled times may cross regime breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScope {
    #[default]
    Global,
    /// Times stay inside the regime they started in.
    PerRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionVariant {
    /// Add/erase arbitrary points. With `bridge` the added state is drawn
    /// from the two-sided skeleton bridge instead of the forward row.
    RandomPoint { bridge: bool },
    /// Add/erase virtual points only.
    VirtualPoint,
}

impl Default for DimensionVariant {
    fn default() -> Self {
        DimensionVariant::RandomPoint { bridge: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    ChangeTime {
        variant: ChangeTimeVariant,
        scope: TimeScope,
    },
    ChangeState,
    Dimension(DimensionVariant),
}

impl MoveKind {
    pub fn is_dimension(&self) -> bool {
        matches!(self, MoveKind::Dimension(_))
    }
}

/// Concrete move a proposal came from, used to key diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveLabel {
    ChangeTime,
    ChangeState,
    AddRandomPoint,
    EraseRandomPoint,
    AddVirtualPoint,
    EraseVirtualPoint,
}

impl MoveLabel {
    pub const ALL: [MoveLabel; 6] = [
        MoveLabel::ChangeTime,
        MoveLabel::ChangeState,
        MoveLabel::AddRandomPoint,
        MoveLabel::EraseRandomPoint,
        MoveLabel::AddVirtualPoint,
        MoveLabel::EraseVirtualPoint,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveLabel::ChangeTime => "change_time",
            MoveLabel::ChangeState => "change_state",
            MoveLabel::AddRandomPoint => "add_random_point",
            MoveLabel::EraseRandomPoint => "erase_random_point",
            MoveLabel::AddVirtualPoint => "add_virtual_point",
            MoveLabel::EraseVirtualPoint => "erase_virtual_point",
        }
    }
}

/// Reason a proposal degenerated to the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalFlag {
    /// Every candidate state had zero bridge weight.
    ZeroBridge,
    /// Erase of a virtual point on a path without one.
    NoVirtualPoints,
}

/// In-place change to a marked path. Point indices are one-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit<T> {
    Identity,
    SetTime { index: usize, time: T },
    SetTimes { times: Vec<T> },
    SetState { index: usize, state: usize },
    Insert { time: T, state: usize },
    Remove { index: usize },
}

impl<T: Real> Edit<T> {
    /// Applies the edit and returns the edit that undoes it.
    pub(crate) fn apply(self, path: &mut MarkedPath<T>) -> Edit<T> {
        match self {
            Edit::Identity => Edit::Identity,
            Edit::SetTime { index, time } => {
                let old = path.anchor(index);
                path.set_time(index, time);
                Edit::SetTime { index, time: old }
            }
            Edit::SetTimes { times } => {
                let old = path.times().to_vec();
                path.set_times(times);
                Edit::SetTimes { times: old }
            }
            Edit::SetState { index, state } => {
                let old = path.states()[index];
                path.set_state(index, state);
                Edit::SetState { index, state: old }
            }
            Edit::Insert { time, state } => Edit::Remove {
                index: path.insert(time, state),
            },
            Edit::Remove { index } => {
                let (time, state) = path.remove(index);
                Edit::Insert { time, state }
            }
        }
    }

    /// Window `(lo, hi]` outside of which the collapsed path is unchanged,
    /// evaluated on the path before the edit.
    pub(crate) fn window(&self, path: &MarkedPath<T>) -> (T, T) {
        match self {
            Edit::Identity => (path.t_min(), path.t_min()),
            Edit::SetTime { index, .. } => (path.anchor(index - 1), path.anchor(index + 1)),
            Edit::SetTimes { .. } => path.interval(),
            Edit::SetState { index, .. } => (path.anchor(*index), path.anchor(index + 1)),
            Edit::Insert { time, .. } => {
                let k = path.index_at(*time);
                (path.anchor(k), path.anchor(k + 1))
            }
            Edit::Remove { index } => (path.anchor(index - 1), path.anchor(index + 1)),
        }
    }

    /// Inclusive ranges of prior terms touched by the edit, before and after.
    pub(crate) fn prior_ranges(&self, path: &MarkedPath<T>) -> ((usize, usize), (usize, usize)) {
        match self {
            Edit::Identity => ((1, 0), (1, 0)),
            Edit::SetTime { index, .. } => ((*index, *index), (*index, *index)),
            Edit::SetTimes { .. } => ((1, path.len()), (1, path.len())),
            Edit::SetState { index, .. } => ((*index, index + 1), (*index, index + 1)),
            Edit::Insert { time, .. } => {
                let k = path.index_at(*time) + 1;
                ((k, k), (k, k + 1))
            }
            Edit::Remove { index } => ((*index, index + 1), (*index, *index)),
        }
    }
}

/// A proposed edit with its proposal-density correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<T> {
    pub label: MoveLabel,
    pub edit: Edit<T>,
    /// `log q(x' -> x) - log q(x -> x')`.
    pub log_q_ratio: T,
    pub flag: Option<ProposalFlag>,
}

impl<T: Real> Proposal<T> {
    fn new(label: MoveLabel, edit: Edit<T>, log_q_ratio: T) -> Self {
        Self {
            label,
            edit,
            log_q_ratio,
            flag: None,
        }
    }

    pub fn identity(label: MoveLabel) -> Self {
        Self::new(label, Edit::Identity, T::zero())
    }

    fn flagged(label: MoveLabel, flag: ProposalFlag) -> Self {
        Self {
            flag: Some(flag),
            ..Self::identity(label)
        }
    }

    pub fn is_identity(&self) -> bool {
        self.edit == Edit::Identity
    }
}

/// Prior term `k` of a marked path: `log nu(x_0)` for `k = 0`, otherwise
/// `log lambda_j + log P_j(x_(k-1), x_k)` with `j` the regime of `t_k`.
pub fn log_prior_term<T: Real>(path: &MarkedPath<T>, regimes: &RegimePartition<T>, initial: &[T], k: usize) -> T {
    let states = path.states();
    if k == 0 {
        return ln0(initial[states[0]]);
    }
    let j = regimes.regime_at(path.anchor(k));
    ln0(regimes.lambda(j)) + ln0(regimes.prob(j, states[k - 1], states[k]))
}

pub(crate) fn log_prior_range<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    initial: &[T],
    (a, b): (usize, usize),
) -> T {
    let b = b.min(path.len());
    (a..=b).map(|k| log_prior_term(path, regimes, initial, k)).sum()
}

fn unreachable(msg: impl Into<String>) -> Error {
    Error::Unreachable(msg.into())
}

/// Bounds a single point `i` may move within.
pub(crate) fn time_bounds<T: Real>(path: &MarkedPath<T>, regimes: &RegimePartition<T>, i: usize, scope: TimeScope) -> (T, T) {
    let (mut lo, mut hi) = (path.anchor(i - 1), path.anchor(i + 1));
    if scope == TimeScope::PerRegime {
        let (rlo, rhi) = regimes.bounds(regimes.regime_at(path.anchor(i)));
        lo = lo.max(rlo);
        hi = hi.min(rhi);
    }
    (lo, hi)
}

/// Moves point `i` to time `t`.
pub fn change_time_at<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    i: usize,
    t: T,
    scope: TimeScope,
) -> Result<Proposal<T>> {
    if i == 0 || i > path.len() {
        return Err(unreachable(format!("no point with index {i}")));
    }
    let (lo, hi) = time_bounds(path, regimes, i, scope);
    if !(t > lo && t < hi) {
        return Err(unreachable(format!("time {t} outside ({lo}, {hi})")));
    }
    Ok(Proposal::new(MoveLabel::ChangeTime, Edit::SetTime { index: i, time: t }, T::zero()))
}

/// Point counts per regime.
fn regime_counts<T: Real>(times: &[T], regimes: &RegimePartition<T>) -> Vec<usize> {
    let mut counts = vec![0; regimes.count()];
    for &t in times {
        counts[regimes.regime_at(t)] += 1;
    }
    counts
}

/// Replaces every time at once.
pub fn resample_times_at<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    times: Vec<T>,
    scope: TimeScope,
) -> Result<Proposal<T>> {
    let (t_min, t_max) = path.interval();
    if times.len() != path.len() {
        return Err(unreachable("resampled times change the point count"));
    }
    let mut prev = t_min;
    for &t in &times {
        if !(t > prev) {
            return Err(unreachable("resampled times are not increasing"));
        }
        prev = t;
    }
    if !(prev < t_max) && !times.is_empty() {
        return Err(unreachable("resampled times leave the interval"));
    }
    if scope == TimeScope::PerRegime && regime_counts(&times, regimes) != regime_counts(path.times(), regimes) {
        return Err(unreachable("resampled times cross a regime breakpoint"));
    }
    Ok(Proposal::new(MoveLabel::ChangeTime, Edit::SetTimes { times }, T::zero()))
}

pub fn change_time<T: Real, R: Rng + ?Sized>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    variant: ChangeTimeVariant,
    scope: TimeScope,
    rng: &mut R,
) -> Proposal<T> {
    let n = path.len();
    if n == 0 {
        return Proposal::identity(MoveLabel::ChangeTime);
    }
    let edit = match variant {
        ChangeTimeVariant::SinglePoint => {
            let i = rng.random_range(1..=n);
            let (lo, hi) = time_bounds(path, regimes, i, scope);
            Edit::SetTime {
                index: i,
                time: uniform_open(rng, lo, hi),
            }
        }
        ChangeTimeVariant::FullResample => {
            let times = match scope {
                TimeScope::Global => {
                    let (t_min, t_max) = path.interval();
                    sorted_uniforms(rng, n, t_min, t_max)
                }
                TimeScope::PerRegime => {
                    let counts = regime_counts(path.times(), regimes);
                    let mut times = Vec::with_capacity(n);
                    for (j, &c) in counts.iter().enumerate() {
                        let (lo, hi) = regimes.bounds(j);
                        times.extend(sorted_uniforms(rng, c, lo, hi));
                    }
                    times
                }
            };
            Edit::SetTimes { times }
        }
    };
    Proposal::new(MoveLabel::ChangeTime, edit, T::zero())
}

/// Unnormalized bridge weights `(state, weight)` for skeleton state `i`.
///
/// `i = 0` weighs by the initial law, `i = n` by the incoming row only,
/// interior indices by the product of the incoming and outgoing skeleton
/// probabilities, each taken in the regime of its own point.
pub fn state_weights<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    initial: &[T],
    i: usize,
) -> Vec<(usize, T)> {
    let n = path.len();
    let states = path.states();
    let mut out: Vec<(usize, T)> = if i == 0 {
        initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(x, &p)| (x, p))
            .collect()
    } else {
        let j = regimes.regime_at(path.anchor(i));
        let from = states[i - 1];
        let mut row: Vec<(usize, T)> = regimes
            .intensity(j)
            .row(from)
            .iter()
            .map(|&(to, _)| (to, regimes.prob(j, from, to)))
            .collect();
        let stay = regimes.stay(j, from);
        if stay > T::zero() {
            row.push((from, stay));
        }
        row.sort_by_key(|e| e.0);
        row
    };
    if i < n {
        let j = regimes.regime_at(path.anchor(i + 1));
        let to = states[i + 1];
        for e in out.iter_mut() {
            e.1 *= regimes.prob(j, e.0, to);
        }
    }
    out
}

/// Sets skeleton state `i` to `x`.
pub fn change_state_at<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    initial: &[T],
    i: usize,
    x: usize,
) -> Result<Proposal<T>> {
    if i > path.len() {
        return Err(unreachable(format!("no skeleton state with index {i}")));
    }
    let weights = state_weights(path, regimes, initial, i);
    let weight = |s: usize| {
        weights
            .iter()
            .find(|e| e.0 == s)
            .map_or(T::zero(), |e| e.1)
    };
    let (w_new, w_old) = (weight(x), weight(path.states()[i]));
    if !(w_new > T::zero()) {
        return Err(unreachable(format!("state {x} has zero bridge weight at index {i}")));
    }
    if x == path.states()[i] {
        return Ok(Proposal::identity(MoveLabel::ChangeState));
    }
    Ok(Proposal::new(
        MoveLabel::ChangeState,
        Edit::SetState { index: i, state: x },
        ln0(w_old) - w_new.ln(),
    ))
}

pub fn change_state<T: Real, R: Rng + ?Sized>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    initial: &[T],
    rng: &mut R,
) -> Proposal<T> {
    let i = rng.random_range(0..=path.len());
    let weights = state_weights(path, regimes, initial, i);
    let masses: Vec<T> = weights.iter().map(|e| e.1).collect();
    let Some(k) = sample_index(rng, &masses) else {
        return Proposal::flagged(MoveLabel::ChangeState, ProposalFlag::ZeroBridge);
    };
    let x = weights[k].0;
    if x == path.states()[i] {
        return Proposal::identity(MoveLabel::ChangeState);
    }
    let w_old = weights
        .iter()
        .find(|e| e.0 == path.states()[i])
        .map_or(T::zero(), |e| e.1);
    Proposal::new(
        MoveLabel::ChangeState,
        Edit::SetState { index: i, state: x },
        ln0(w_old) - masses[k].ln(),
    )
}

/// Weights of the state of a point inserted at `t` after predecessor state
/// `pred`, with `succ` the next point as `(time, state)` if any.
fn insert_weights<T: Real>(
    regimes: &RegimePartition<T>,
    t: T,
    pred: usize,
    succ: Option<(T, usize)>,
    bridge: bool,
) -> Vec<(usize, T)> {
    let j = regimes.regime_at(t);
    let mut out: Vec<(usize, T)> = regimes
        .intensity(j)
        .row(pred)
        .iter()
        .map(|&(to, _)| (to, regimes.prob(j, pred, to)))
        .collect();
    let stay = regimes.stay(j, pred);
    if stay > T::zero() {
        out.push((pred, stay));
    }
    out.sort_by_key(|e| e.0);
    if bridge {
        if let Some((ts, xs)) = succ {
            let k = regimes.regime_at(ts);
            for e in out.iter_mut() {
                e.1 *= regimes.prob(k, e.0, xs);
            }
            let total: T = out.iter().map(|e| e.1).sum();
            if total > T::zero() {
                out.iter_mut().for_each(|e| e.1 /= total);
            }
        }
    }
    out
}

fn neighbours<T: Real>(path: &MarkedPath<T>, k: usize, skip: usize) -> (usize, Option<(T, usize)>) {
    let states = path.states();
    let next = k + skip;
    let succ = (next <= path.len()).then(|| (path.anchor(next), states[next]));
    (states[k - 1], succ)
}

fn log_weight_of<T: Real>(weights: &[(usize, T)], x: usize) -> T {
    ln0(weights.iter().find(|e| e.0 == x).map_or(T::zero(), |e| e.1))
}

/// Inserts a point `(t, x)`.
pub fn add_random_point_at<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    t: T,
    x: usize,
    bridge: bool,
) -> Result<Proposal<T>> {
    let (t_min, t_max) = path.interval();
    if !(t > t_min && t < t_max) || path.has_time(t) {
        return Err(unreachable(format!("cannot insert a point at {t}")));
    }
    let k = path.index_at(t) + 1;
    let (pred, succ) = neighbours(path, k, 0);
    let log_x = log_weight_of(&insert_weights(regimes, t, pred, succ, bridge), x);
    if log_x == T::neg_infinity() {
        return Err(unreachable(format!("state {x} cannot be proposed at {t}")));
    }
    let duration = path.duration();
    let log_q_ratio = -T::from_count(path.len() + 1).ln() + duration.ln() - log_x;
    Ok(Proposal::new(MoveLabel::AddRandomPoint, Edit::Insert { time: t, state: x }, log_q_ratio))
}

/// Removes point `i`.
pub fn erase_random_point_at<T: Real>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    i: usize,
    bridge: bool,
) -> Result<Proposal<T>> {
    let n = path.len();
    if i == 0 || i > n {
        return Err(unreachable(format!("no point with index {i}")));
    }
    let t = path.anchor(i);
    let (pred, succ) = neighbours(path, i, 1);
    let log_x = log_weight_of(&insert_weights(regimes, t, pred, succ, bridge), path.states()[i]);
    let log_q_ratio = log_x - path.duration().ln() + T::from_count(n).ln();
    Ok(Proposal::new(MoveLabel::EraseRandomPoint, Edit::Remove { index: i }, log_q_ratio))
}

/// Inserts a virtual point at `t`.
pub fn add_virtual_point_at<T: Real>(path: &MarkedPath<T>, t: T) -> Result<Proposal<T>> {
    let (t_min, t_max) = path.interval();
    if !(t > t_min && t < t_max) || path.has_time(t) {
        return Err(unreachable(format!("cannot insert a point at {t}")));
    }
    let x = path.state_at(t);
    let log_q_ratio = path.duration().ln() - T::from_count(path.virtual_count() + 1).ln();
    Ok(Proposal::new(MoveLabel::AddVirtualPoint, Edit::Insert { time: t, state: x }, log_q_ratio))
}

/// Removes the virtual point `i`.
pub fn erase_virtual_point_at<T: Real>(path: &MarkedPath<T>, i: usize) -> Result<Proposal<T>> {
    let states = path.states();
    if i == 0 || i > path.len() || states[i - 1] != states[i] {
        return Err(unreachable(format!("point {i} is not virtual")));
    }
    let log_q_ratio = T::from_count(path.virtual_count()).ln() - path.duration().ln();
    Ok(Proposal::new(MoveLabel::EraseVirtualPoint, Edit::Remove { index: i }, log_q_ratio))
}

fn draw_time<T: Real, R: Rng + ?Sized>(path: &MarkedPath<T>, rng: &mut R) -> T {
    let (t_min, t_max) = path.interval();
    loop {
        let t = uniform_open(rng, t_min, t_max);
        if !path.has_time(t) {
            return t;
        }
    }
}

/// Chooses add or erase with equal probability; erasing from an empty
/// path does nothing.
pub fn propose_dimension<T: Real, R: Rng + ?Sized>(
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    variant: DimensionVariant,
    rng: &mut R,
) -> Proposal<T> {
    let add = rng.random_bool(0.5);
    match variant {
        DimensionVariant::RandomPoint { bridge } => {
            if add {
                let t = draw_time(path, rng);
                let k = path.index_at(t) + 1;
                let (pred, succ) = neighbours(path, k, 0);
                let weights = insert_weights(regimes, t, pred, succ, bridge);
                let masses: Vec<T> = weights.iter().map(|e| e.1).collect();
                match sample_index(rng, &masses) {
                    Some(k) => add_random_point_at(path, regimes, t, weights[k].0, bridge)
                        .expect("sampled insertion is reachable"),
                    None => Proposal::flagged(MoveLabel::AddRandomPoint, ProposalFlag::ZeroBridge),
                }
            } else if path.is_empty() {
                Proposal::identity(MoveLabel::EraseRandomPoint)
            } else {
                let i = rng.random_range(1..=path.len());
                erase_random_point_at(path, regimes, i, bridge).expect("index in range")
            }
        }
        DimensionVariant::VirtualPoint => {
            if add {
                add_virtual_point_at(path, draw_time(path, rng)).expect("fresh time")
            } else {
                let virtuals = path.virtual_indices();
                if virtuals.is_empty() {
                    Proposal::flagged(MoveLabel::EraseVirtualPoint, ProposalFlag::NoVirtualPoints)
                } else {
                    let i = virtuals[rng.random_range(0..virtuals.len())];
                    erase_virtual_point_at(path, i).expect("virtual index")
                }
            }
        }
    }
}

/// Draws a proposal of the given kind.
pub fn propose<T: Real, R: Rng + ?Sized>(
    kind: MoveKind,
    path: &MarkedPath<T>,
    regimes: &RegimePartition<T>,
    initial: &[T],
    rng: &mut R,
) -> Proposal<T> {
    match kind {
        MoveKind::ChangeTime { variant, scope } => change_time(path, regimes, variant, scope, rng),
        MoveKind::ChangeState => change_state(path, regimes, initial, rng),
        MoveKind::Dimension(variant) => propose_dimension(path, regimes, variant, rng),
    }
}
