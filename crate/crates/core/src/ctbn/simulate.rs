use rand::Rng;

use crate::error::{Error, Result};
use crate::markov::{PathView, SamplePath};
use crate::scalar::Real;

use super::spec::CtbnSpec;
use super::trajectory::CtbnTrajectory;

/// Forward simulation of the whole network on `[t_min, t_max]`.
pub fn simulate<T: Real, R: Rng>(spec: &CtbnSpec<T>, t_min: T, t_max: T, rng: &mut R) -> Result<CtbnTrajectory<T>> {
    let fixed = vec![None; spec.node_count()];
    simulate_given(spec, &fixed, t_min, t_max, rng)
}

/// Samples the free nodes from their condition-by-intervention dynamics:
/// nodes with `Some(path)` in `fixed` follow that path regardless of the
/// model, and the rest evolve by the competing-clocks construction.
pub fn simulate_given<T: Real, R: Rng>(
    spec: &CtbnSpec<T>,
    fixed: &[Option<SamplePath<T>>],
    t_min: T,
    t_max: T,
    rng: &mut R,
) -> Result<CtbnTrajectory<T>> {
    let n = spec.node_count();
    if fixed.len() != n {
        return Err(Error::InvalidEvidence(format!("expected {n} entries, got {}", fixed.len())));
    }
    for (v, p) in fixed.iter().enumerate() {
        if let Some(p) = p {
            if p.interval() != (t_min, t_max) {
                return Err(Error::InvalidEvidence(format!("path of node {v} has the wrong interval")));
            }
        }
    }
    let initial_fixed: Vec<Option<usize>> = fixed.iter().map(|p| p.as_ref().map(|p| p.initial_state())).collect();
    let mut x = spec.sample_initial(&initial_fixed, rng);
    let x0 = x.clone();
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();

    let mut forced: Vec<(T, usize, usize)> = fixed
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.as_ref().map(|p| (v, p)))
        .flat_map(|(v, p)| p.jumps().map(move |(t, s)| (t, v, s)))
        .collect();
    forced.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut forced = forced.into_iter().peekable();

    let mut times: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut states: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut rates = vec![T::zero(); free.len()];
    let mut t = t_min;
    loop {
        for (k, &v) in free.iter().enumerate() {
            rates[k] = spec.cim(v, spec.config_of(v, &x)).total_rate(x[v]);
        }
        let total: T = rates.iter().copied().sum();
        let next_forced = forced.peek().map(|e| e.0).unwrap_or(t_max);
        let wait = if total > T::zero() {
            let u: f64 = rng.random();
            -T::lit(1.0 - u).ln() / total
        } else {
            T::infinity()
        };
        if t + wait >= next_forced {
            match forced.next() {
                Some((s, v, to)) => {
                    t = s;
                    x[v] = to;
                    times[v].push(s);
                    states[v].push(to);
                    continue;
                }
                None => break,
            }
        }
        t += wait;
        let k = crate::markov::sample_index(rng, &rates).expect("positive total rate");
        let v = free[k];
        let row = spec.cim(v, spec.config_of(v, &x)).row(x[v]);
        let weights: Vec<T> = row.iter().map(|&(_, r)| r).collect();
        let to = row[crate::markov::sample_index(rng, &weights).expect("positive row")].0;
        x[v] = to;
        times[v].push(t);
        states[v].push(to);
    }

    let paths = (0..n)
        .map(|v| match &fixed[v] {
            Some(p) => Ok(p.clone()),
            None => SamplePath::new(
                t_min,
                t_max,
                x0[v],
                std::mem::take(&mut times[v]),
                std::mem::take(&mut states[v]),
            ),
        })
        .collect::<Result<Vec<_>>>()?;
    CtbnTrajectory::new(paths)
}

/// Value of every node at each of `times`.
pub fn states_at<T: Real>(traj: &CtbnTrajectory<T>, times: &[T]) -> Vec<Vec<usize>> {
    times
        .iter()
        .map(|&t| traj.paths().iter().map(|p| p.state_at(t)).collect())
        .collect()
}
