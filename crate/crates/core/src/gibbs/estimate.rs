use crate::ctbn::CtbnTrajectory;
use crate::error::{Error, Result};
use crate::markov::SamplePath;
use crate::mcmc::MoveStats;
use crate::scalar::Real;

/// Increasing evaluation times inside the observation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    points: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    /// `count` equispaced points including both ends.
    pub fn equispaced(t_min: T, t_max: T, count: usize) -> Result<Self> {
        if count < 2 || !(t_min < t_max) {
            return Err(Error::InvalidConfig(format!(
                "grid of {count} points on [{t_min}, {t_max}]"
            )));
        }
        let step = (t_max - t_min) / T::from_count(count - 1);
        let mut points: Vec<T> = (0..count).map(|k| t_min + step * T::from_count(k)).collect();
        points[count - 1] = t_max;
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<T>, t_min: T, t_max: T) -> Result<Self> {
        if points.is_empty()
            || points.windows(2).any(|w| !(w[0] < w[1]))
            || points[0] < t_min
            || points[points.len() - 1] > t_max
        {
            return Err(Error::InvalidConfig("grid points must increase inside the interval".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// State of `path` at every grid point.
    pub fn states_of(&self, path: &SamplePath<T>) -> Vec<usize> {
        let times = path.jump_times();
        let mut k = 0;
        self.points
            .iter()
            .map(|&t| {
                while k < times.len() && times[k] <= t {
                    k += 1;
                }
                path.state_before(k)
            })
            .collect()
    }
}

/// Visit counts of every (grid point, state) pair for one node.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tally {
    size: usize,
    counts: Vec<u64>,
}

impl Tally {
    pub(crate) fn new(grid: usize, size: usize) -> Self {
        Self {
            size,
            counts: vec![0; grid * size],
        }
    }

    pub(crate) fn add(&mut self, states: &[usize]) {
        for (g, &x) in states.iter().enumerate() {
            self.counts[g * self.size + x] += 1;
        }
    }

    pub(crate) fn merge(&mut self, other: &Tally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Chain diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub moves: MoveStats,
    /// Move statistics per hidden node, keyed by node index.
    pub node_moves: Vec<(usize, MoveStats)>,
    pub sweeps: usize,
    pub samples: usize,
    /// Wall-clock seconds spent in sweeps.
    pub sweep_seconds: f64,
    /// Node updates that kept the old path because the new one would have
    /// jumped together with another node.
    pub clashes: u64,
}

impl Diagnostics {
    pub fn mean_sweep_seconds(&self) -> f64 {
        if self.sweeps == 0 {
            0.0
        } else {
            self.sweep_seconds / self.sweeps as f64
        }
    }

    pub fn overall_acceptance(&self) -> Option<f64> {
        self.moves.overall_acceptance()
    }
}

/// Empirical marginals of the hidden nodes on a time grid.
#[derive(Debug, Clone)]
pub struct PosteriorEstimate<T> {
    pub grid: TimeGrid<T>,
    /// Hidden nodes in increasing order.
    pub nodes: Vec<usize>,
    /// `probabilities[k][g][a]` for node `nodes[k]` at grid point `g`.
    pub probabilities: Vec<Vec<Vec<f64>>>,
    /// Batch-means standard errors with the same layout, when available.
    pub std_errors: Option<Vec<Vec<Vec<f64>>>>,
    pub samples: usize,
    pub diagnostics: Diagnostics,
    /// Diagnostics of every chain that contributed.
    pub chains: Vec<Diagnostics>,
}

/// Compares everything except wall-clock timings.
impl<T: PartialEq> PartialEq for PosteriorEstimate<T> {
    fn eq(&self, other: &Self) -> bool {
        let strip = |d: &Diagnostics| Diagnostics {
            sweep_seconds: 0.0,
            ..d.clone()
        };
        self.grid == other.grid
            && self.nodes == other.nodes
            && self.probabilities == other.probabilities
            && self.std_errors == other.std_errors
            && self.samples == other.samples
            && strip(&self.diagnostics) == strip(&other.diagnostics)
            && self.chains.iter().map(strip).eq(other.chains.iter().map(strip))
    }
}

impl<T: Real> PosteriorEstimate<T> {
    /// Probability row of `node` at grid point `g`.
    pub fn marginal(&self, node: usize, g: usize) -> Option<&[f64]> {
        let k = self.nodes.iter().position(|&v| v == node)?;
        Some(&self.probabilities[k][g])
    }

    /// `P(node(t_g) = state)` over the whole grid.
    pub fn series(&self, node: usize, state: usize) -> Option<Vec<f64>> {
        let k = self.nodes.iter().position(|&v| v == node)?;
        Some(self.probabilities[k].iter().map(|row| row[state]).collect())
    }

    /// Smallest state whose cumulative probability reaches `q`, per grid point.
    pub fn quantile(&self, node: usize, q: f64) -> Option<Vec<usize>> {
        let k = self.nodes.iter().position(|&v| v == node)?;
        Some(
            self.probabilities[k]
                .iter()
                .map(|row| {
                    let mut acc = 0.0;
                    for (a, &p) in row.iter().enumerate() {
                        acc += p;
                        if acc >= q - 1e-12 {
                            return a;
                        }
                    }
                    row.len() - 1
                })
                .collect(),
        )
    }
}

/// Accumulates grid visit counts of the hidden nodes, overall and per batch.
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    pub(crate) nodes: Vec<usize>,
    pub(crate) sizes: Vec<usize>,
    pub(crate) tallies: Vec<Tally>,
    pub(crate) batches: Vec<Vec<Tally>>,
    pub(crate) batch_samples: Vec<usize>,
    pub(crate) samples: usize,
    batch_len: usize,
    grid_len: usize,
}

impl Accumulator {
    /// `batch_len = 0` disables batch means.
    pub(crate) fn new(nodes: Vec<usize>, sizes: Vec<usize>, grid_len: usize, batch_len: usize) -> Self {
        let tallies = sizes.iter().map(|&s| Tally::new(grid_len, s)).collect();
        Self {
            nodes,
            sizes,
            tallies,
            batches: Vec::new(),
            batch_samples: Vec::new(),
            samples: 0,
            batch_len,
            grid_len,
        }
    }

    pub(crate) fn add<T: Real>(&mut self, grid: &TimeGrid<T>, traj: &CtbnTrajectory<T>) {
        if self.batch_len > 0 && self.samples.is_multiple_of(self.batch_len) {
            self.batches
                .push(self.sizes.iter().map(|&s| Tally::new(self.grid_len, s)).collect());
            self.batch_samples.push(0);
        }
        for (k, &v) in self.nodes.iter().enumerate() {
            let states = grid.states_of(traj.path(v));
            self.tallies[k].add(&states);
            if let Some(batch) = self.batches.last_mut() {
                batch[k].add(&states);
            }
        }
        if let Some(n) = self.batch_samples.last_mut() {
            *n += 1;
        }
        self.samples += 1;
    }

    pub(crate) fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.tallies.iter_mut().zip(&other.tallies) {
            a.merge(b);
        }
        self.batches.extend(other.batches.iter().cloned());
        self.batch_samples.extend(other.batch_samples.iter().copied());
        self.samples += other.samples;
    }

    fn frequencies(tally: &Tally, grid_len: usize, samples: usize) -> Vec<Vec<f64>> {
        (0..grid_len)
            .map(|g| {
                tally.counts[g * tally.size..(g + 1) * tally.size]
                    .iter()
                    .map(|&c| c as f64 / samples as f64)
                    .collect()
            })
            .collect()
    }

    pub(crate) fn probabilities(&self) -> Vec<Vec<Vec<f64>>> {
        self.tallies
            .iter()
            .map(|t| Self::frequencies(t, self.grid_len, self.samples.max(1)))
            .collect()
    }

    /// Batch-means standard errors over the complete batches.
    pub(crate) fn std_errors(&self) -> Option<Vec<Vec<Vec<f64>>>> {
        let full: Vec<usize> = (0..self.batches.len())
            .filter(|&b| self.batch_samples[b] == self.batch_len)
            .collect();
        if self.batch_len == 0 || full.len() < 2 {
            return None;
        }
        let nb = full.len() as f64;
        let means: Vec<Vec<Vec<Vec<f64>>>> = full
            .iter()
            .map(|&b| {
                self.batches[b]
                    .iter()
                    .map(|t| Self::frequencies(t, self.grid_len, self.batch_len))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        for k in 0..self.nodes.len() {
            let mut node = Vec::with_capacity(self.grid_len);
            for g in 0..self.grid_len {
                let row = (0..self.sizes[k])
                    .map(|a| {
                        let mean = means.iter().map(|m| m[k][g][a]).sum::<f64>() / nb;
                        let var = means.iter().map(|m| (m[k][g][a] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
                        (var / nb).sqrt()
                    })
                    .collect();
                node.push(row);
            }
            out.push(node);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equispaced_grid() {
        let g = TimeGrid::equispaced(0.0_f64, 1.0, 101).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[100], 1.0);
        assert!((g.points()[37] - 0.37).abs() < 1e-15);
        assert!(TimeGrid::equispaced(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::equispaced(1.0, 1.0, 5).is_err());
        assert!(TimeGrid::from_points(vec![0.2, 0.1], 0.0, 1.0).is_err());
        assert!(TimeGrid::from_points(vec![0.5, 1.5], 0.0, 1.0).is_err());
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 1.0], 0.0, 1.0).is_ok());
    }

    #[test]
    fn states_of_is_right_continuous() {
        let p = SamplePath::new(0.0, 1.0, 0, vec![0.25, 0.6], vec![1, 2]).unwrap();
        let g = TimeGrid::from_points(vec![0.0, 0.2, 0.25, 0.5, 0.6, 1.0], 0.0, 1.0).unwrap();
        assert_eq!(g.states_of(&p), vec![0, 0, 1, 1, 2, 2]);
    }

    fn constant_traj(a: usize) -> CtbnTrajectory<f64> {
        CtbnTrajectory::new(vec![SamplePath::constant(0.0, 1.0, a)]).unwrap()
    }

    #[test]
    fn accumulator_frequencies_and_batches() {
        let g = TimeGrid::equispaced(0.0, 1.0, 3).unwrap();
        let mut acc = Accumulator::new(vec![0], vec![3], 3, 2);
        for a in [0, 0, 1, 2, 2, 2] {
            acc.add(&g, &constant_traj(a));
        }
        let p = acc.probabilities();
        assert_eq!(p[0][1], vec![2.0 / 6.0, 1.0 / 6.0, 3.0 / 6.0]);
        let se = acc.std_errors().unwrap();
        // Batch means of state 0: 1, 0, 0.
        let want = ((1.0_f64 - 1.0 / 3.0).powi(2) + 2.0 * (1.0_f64 / 3.0).powi(2)) / 2.0 / 3.0;
        assert!((se[0][0][0] - want.sqrt()).abs() < 1e-12);

        let mut other = Accumulator::new(vec![0], vec![3], 3, 2);
        other.add(&g, &constant_traj(1));
        acc.merge(&other);
        assert_eq!(acc.samples, 7);
        assert!((acc.probabilities()[0][0][1] - 2.0 / 7.0).abs() < 1e-15);
        // The incomplete batch is left out.
        assert_eq!(acc.std_errors().unwrap()[0][0].len(), 3);
        assert!(Accumulator::new(vec![0], vec![3], 3, 0).std_errors().is_none());
    }

    #[test]
    fn estimate_queries() {
        let g = TimeGrid::equispaced(0.0, 1.0, 2).unwrap();
        let est = PosteriorEstimate {
            grid: g,
            nodes: vec![3],
            probabilities: vec![vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.4, 0.0]]],
            std_errors: None,
            samples: 10,
            diagnostics: Diagnostics::default(),
            chains: vec![],
        };
        assert_eq!(est.marginal(3, 1).unwrap(), &[0.6, 0.4, 0.0]);
        assert!(est.marginal(0, 1).is_none());
        assert_eq!(est.series(3, 2).unwrap(), vec![0.5, 0.0]);
        assert_eq!(est.quantile(3, 0.5).unwrap(), vec![1, 0]);
        assert_eq!(est.quantile(3, 0.9).unwrap(), vec![2, 1]);
        assert_eq!(est.quantile(3, 0.1).unwrap(), vec![0, 0]);
    }
}
