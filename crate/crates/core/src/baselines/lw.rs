use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ctbn::{simulate_given, CtbnSpec, CtbnTrajectory, InitialDistribution};
use crate::error::{Error, Result};
use crate::gibbs::{Diagnostics, Evidence, PosteriorEstimate, TimeGrid};
use crate::scalar::Real;

/// One importance sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<T> {
    pub trajectory: CtbnTrajectory<T>,
    pub log_weight: T,
}

/// Concentration of a batch of importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDiagnostics {
    /// Normalized weights in decreasing order.
    pub sorted: Vec<f64>,
    /// `cumulative[k]` is the mass of the `k + 1` largest weights.
    pub cumulative: Vec<f64>,
    /// `1 / sum w_i^2`.
    pub ess: f64,
}

impl WeightDiagnostics {
    /// Mass of the `k` largest weights.
    pub fn top_k_mass(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.cumulative[k.min(self.cumulative.len()) - 1]
    }
}

/// Normalizes log weights and summarizes how concentrated they are.
pub fn weight_degeneracy<T: Real>(log_weights: &[T]) -> Result<WeightDiagnostics> {
    let logs: Vec<f64> = log_weights.iter().map(|w| w.as_f64()).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let mut sorted: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = sorted.iter().sum();
    sorted.iter_mut().for_each(|w| *w /= total);
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut cumulative: Vec<f64> = sorted
        .iter()
        .map(|&w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }
    let ess = 1.0 / sorted.iter().map(|w| w * w).sum::<f64>();
    Ok(WeightDiagnostics { sorted, cumulative, ess })
}

/// Log weight of a trajectory whose hidden nodes followed the
/// condition-by-intervention dynamics: the factors of the observed nodes.
pub fn log_weight<T: Real>(spec: &CtbnSpec<T>, evidence: &Evidence<T>, traj: &CtbnTrajectory<T>) -> Result<T> {
    evidence.log_weight(spec, traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LwConfig {
    pub samples: usize,
    pub seed: u64,
    pub grid_points: usize,
    /// Keep every weighted trajectory in the result.
    pub keep_samples: bool,
}

impl LwConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            grid_points: 101,
            keep_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LwResult<T> {
    pub estimate: PosteriorEstimate<T>,
    pub log_weights: Vec<T>,
    pub diagnostics: WeightDiagnostics,
    pub samples: Vec<WeightedSample<T>>,
}

/// Self-normalized importance sampling with the condition-by-intervention
/// dynamics as proposal.
pub fn likelihood_weighting<T: Real>(spec: &CtbnSpec<T>, evidence: &Evidence<T>, config: &LwConfig) -> Result<LwResult<T>> {
    if config.samples == 0 {
        return Err(Error::InvalidConfig("likelihood weighting needs at least one sample".into()));
    }
    if let InitialDistribution::FullConditional(_) = spec.initial() {
        return Err(Error::Unsupported(
            "likelihood weighting needs a Bayesian-network initial distribution".into(),
        ));
    }
    let (t_min, t_max) = evidence.interval();
    let grid = TimeGrid::equispaced(t_min, t_max, config.grid_points)?;
    let hidden = evidence.hidden_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Weighted indicator sums, stored relative to the running maximum log weight.
    let mut sums: Vec<Vec<Vec<f64>>> = hidden
        .iter()
        .map(|&v| vec![vec![0.0; spec.alphabet_size(v)]; grid.len()])
        .collect();
    let mut total = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut log_weights = Vec::with_capacity(config.samples);
    let mut kept = Vec::new();
    for _ in 0..config.samples {
        let traj = simulate_given(spec, evidence.paths(), t_min, t_max, &mut rng)?;
        let lw = log_weight(spec, evidence, &traj)?;
        log_weights.push(lw);
        let l = lw.as_f64();
        if l.is_finite() {
            if l > max {
                if max.is_finite() {
                    let shrink = (max - l).exp();
                    total *= shrink;
                    sums.iter_mut().flatten().flatten().for_each(|s| *s *= shrink);
                }
                max = l;
            }
            let w = (l - max).exp();
            total += w;
            for (k, &v) in hidden.iter().enumerate() {
                for (g, x) in grid.states_of(traj.path(v)).into_iter().enumerate() {
                    sums[k][g][x] += w;
                }
            }
        }
        if config.keep_samples {
            kept.push(WeightedSample {
                trajectory: traj,
                log_weight: lw,
            });
        }
    }
    let diagnostics = weight_degeneracy(&log_weights)?;
    let probabilities = sums
        .into_iter()
        .map(|node| {
            node.into_iter()
                .map(|row| row.into_iter().map(|s| s / total).collect())
                .collect()
        })
        .collect();
    Ok(LwResult {
        estimate: PosteriorEstimate {
            grid,
            nodes: hidden,
            probabilities,
            std_errors: None,
            samples: config.samples,
            diagnostics: Diagnostics::default(),
            chains: Vec::new(),
        },
        log_weights,
        diagnostics,
        samples: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctbn::simulate;
    use crate::markov::SamplePath;
    use crate::testing::{example1, example2, node, q, uniform_initial};

    #[test]
    fn equal_weights() {
        let d = weight_degeneracy(&[-3.0_f64; 10]).unwrap();
        assert!((d.ess - 10.0).abs() < 1e-12);
        for (k, c) in d.cumulative.iter().enumerate() {
            assert!((c - 0.1 * (k + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(d.top_k_mass(0), 0.0);
        assert_eq!(d.top_k_mass(50), 1.0);
    }

    #[test]
    fn dominant_weight() {
        let mut logs = vec![-800.0_f64; 99];
        logs.push(0.0);
        let d = weight_degeneracy(&logs).unwrap();
        assert!((d.sorted[0] - 1.0).abs() < 1e-12);
        assert!((d.ess - 1.0).abs() < 1e-9);
        assert!(weight_degeneracy(&[f64::NEG_INFINITY; 3]).is_err());
        assert!(weight_degeneracy::<f64>(&[]).is_err());
    }

    fn from_table(cumulative: &[f64], m: usize) -> Vec<f64> {
        let mut w: Vec<f64> = cumulative
            .iter()
            .scan(0.0, |prev, &c| {
                let d = c - *prev;
                *prev = c;
                Some(d)
            })
            .collect();
        let rest = (1.0 - cumulative[cumulative.len() - 1]) / (m - cumulative.len()) as f64;
        w.extend(std::iter::repeat_n(rest, m - cumulative.len()));
        w.iter().map(|x| x.ln() + 7.0).collect()
    }

    #[test]
    fn published_weight_tables() {
        let t1 = [0.538, 0.906, 0.939, 0.955, 0.967, 0.974, 0.981, 0.984, 0.986, 0.988];
        let t2 = [0.589, 0.741, 0.781, 0.803, 0.825, 0.847, 0.867, 0.886, 0.899, 0.912];
        for table in [t1, t2] {
            let d = weight_degeneracy(&from_table(&table, 10_000)).unwrap();
            for (k, c) in table.iter().enumerate() {
                assert!((d.cumulative[k] - c).abs() < 1e-9);
            }
            assert!(d.top_k_mass(10) > 0.5);
            let ess = 1.0 / table
                .iter()
                .scan(0.0, |p, &c| {
                    let w = c - *p;
                    *p = c;
                    Some(w * w)
                })
                .sum::<f64>();
            assert!(d.ess < ess + 1e-3 && d.ess > ess * 0.99);
        }
    }

    #[test]
    fn no_evidence_means_equal_weights() {
        let spec = example1();
        let ev = Evidence::empty(&spec, 0.0, 1.0).unwrap();
        let r = likelihood_weighting(&spec, &ev, &LwConfig { grid_points: 11, ..LwConfig::new(2000, 1) }).unwrap();
        assert!(r.log_weights.iter().all(|&w| w == 0.0));
        assert!((r.diagnostics.ess - 2000.0).abs() < 1e-6);
        // Prior marginal of X.
        for (g, &t) in r.estimate.grid.points().iter().enumerate() {
            let want = 5.0 / 9.0 - (-9.0 * t).exp() / 18.0;
            assert!((r.estimate.probabilities[0][g][0] - want).abs() < 0.05);
        }
    }

    #[test]
    fn impossible_evidence() {
        let x = node("X", 2, vec![], vec![q(&[&[-1.0, 1.0], &[1.0, -1.0]])]);
        let stuck = q(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let y = node("Y", 2, vec![0], vec![stuck.clone(), stuck]);
        let spec = CtbnSpec::new(vec![x, y], uniform_initial(&[2, 2])).unwrap();
        let path = SamplePath::new(0.0, 1.0, 0, vec![0.5], vec![1]).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(1, path)]).unwrap();
        assert!(matches!(
            likelihood_weighting(&spec, &ev, &LwConfig::new(20, 0)),
            Err(Error::DegenerateWeights)
        ));
        assert!(likelihood_weighting(&spec, &ev, &LwConfig::new(0, 0)).is_err());
    }

    #[test]
    fn weights_and_samples_agree() {
        let spec = example2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tr = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
        let ev = Evidence::new(&spec, 0.0, 1.0, vec![(1, tr.path(1).clone())]).unwrap();
        let config = LwConfig { keep_samples: true, grid_points: 5, ..LwConfig::new(50, 4) };
        let a = likelihood_weighting(&spec, &ev, &config).unwrap();
        assert_eq!(a, likelihood_weighting(&spec, &ev, &config).unwrap());
        for s in &a.samples {
            assert_eq!(s.trajectory.path(1), tr.path(1));
            assert_eq!(s.log_weight, log_weight(&spec, &ev, &s.trajectory).unwrap());
        }
        for row in &a.estimate.probabilities[0] {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
