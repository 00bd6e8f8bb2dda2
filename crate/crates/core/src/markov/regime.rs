use std::sync::Arc;

use super::intensity::{IntensityMatrix, SkeletonMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How uniformization rates are chosen for a set of regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPolicy {
    /// `lambda_j = multiplier * max_x Q_j(x)`.
    pub multiplier: f64,
    /// Use one rate, the largest of the per-regime rates, on every regime.
    pub uniform: bool,
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        Self {
            multiplier: 2.5,
            uniform: false,
        }
    }
}

/// A partition of `[t_min, t_max]` into intervals of homogeneity, each with
/// its own intensity matrix and uniformization rate.
///
/// Regime `j` covers `[r_j, r_(j+1))` with `r_0 = t_min` and the last regime
/// closed at `t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePartition<T> {
    t_min: T,
    t_max: T,
    breakpoints: Vec<T>,
    regimes: Vec<Arc<IntensityMatrix<T>>>,
    lambdas: Vec<T>,
}

impl<T: Real> RegimePartition<T> {
    pub fn new(
        t_min: T,
        t_max: T,
        breakpoints: Vec<T>,
        regimes: Vec<Arc<IntensityMatrix<T>>>,
        lambdas: Vec<T>,
    ) -> Result<Self> {
        if !(t_min < t_max) {
            return Err(Error::InvalidRegimes(format!(
                "interval [{t_min}, {t_max}] is empty"
            )));
        }
        let mut prev = t_min;
        for &r in &breakpoints {
            if !(r > prev) {
                return Err(Error::InvalidRegimes(format!(
                    "breakpoint {r} does not exceed {prev}"
                )));
            }
            prev = r;
        }
        if !breakpoints.is_empty() && !(prev < t_max) {
            return Err(Error::InvalidRegimes(format!(
                "breakpoint {prev} is not below t_max = {t_max}"
            )));
        }
        if regimes.len() != breakpoints.len() + 1 || lambdas.len() != regimes.len() {
            return Err(Error::InvalidRegimes(format!(
                "{} breakpoints need {} regimes and rates, got {} and {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                regimes.len(),
                lambdas.len()
            )));
        }
        let size = regimes[0].size();
        for (j, (q, &lambda)) in regimes.iter().zip(&lambdas).enumerate() {
            if q.size() != size {
                return Err(Error::InvalidRegimes(format!(
                    "regime {j} has alphabet size {}, expected {size}",
                    q.size()
                )));
            }
            if !lambda.is_finite() || lambda < q.max_rate() {
                return Err(Error::RateBelowMaximum {
                    lambda: lambda.as_f64(),
                    max_rate: q.max_rate().as_f64(),
                });
            }
        }
        Ok(Self {
            t_min,
            t_max,
            breakpoints,
            regimes,
            lambdas,
        })
    }

    /// One homogeneous regime over the whole interval.
    pub fn single(q: Arc<IntensityMatrix<T>>, lambda: T, t_min: T, t_max: T) -> Result<Self> {
        Self::new(t_min, t_max, Vec::new(), vec![q], vec![lambda])
    }

    /// Regimes with rates chosen by `policy`.
    pub fn with_policy(
        t_min: T,
        t_max: T,
        breakpoints: Vec<T>,
        regimes: Vec<Arc<IntensityMatrix<T>>>,
        policy: LambdaPolicy,
    ) -> Result<Self> {
        let mult = T::lit(policy.multiplier);
        if !(mult >= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "lambda multiplier {} must be at least 1",
                policy.multiplier
            )));
        }
        let mut lambdas: Vec<T> = regimes.iter().map(|q| mult * q.max_rate()).collect();
        if policy.uniform {
            let top = lambdas.iter().copied().fold(T::zero(), T::max);
            lambdas.iter_mut().for_each(|l| *l = top);
        }
        Self::new(t_min, t_max, breakpoints, regimes, lambdas)
    }

    pub fn interval(&self) -> (T, T) {
        (self.t_min, self.t_max)
    }

    pub fn duration(&self) -> T {
        self.t_max - self.t_min
    }

    pub fn count(&self) -> usize {
        self.regimes.len()
    }

    pub fn size(&self) -> usize {
        self.regimes[0].size()
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    /// Index `j` of the regime containing `t` (right-continuous).
    pub fn regime_at(&self, t: T) -> usize {
        self.breakpoints.partition_point(|&r| r <= t)
    }

    /// Interval `[lo, hi)` covered by regime `j`.
    pub fn bounds(&self, j: usize) -> (T, T) {
        let lo = if j == 0 {
            self.t_min
        } else {
            self.breakpoints[j - 1]
        };
        let hi = if j == self.breakpoints.len() {
            self.t_max
        } else {
            self.breakpoints[j]
        };
        (lo, hi)
    }

    pub fn intensity(&self, j: usize) -> &IntensityMatrix<T> {
        &self.regimes[j]
    }

    pub fn intensity_arc(&self, j: usize) -> &Arc<IntensityMatrix<T>> {
        &self.regimes[j]
    }

    pub fn lambda(&self, j: usize) -> T {
        self.lambdas[j]
    }

    pub fn skeleton(&self, j: usize) -> SkeletonMatrix<T> {
        SkeletonMatrix::new(self.regimes[j].clone(), self.lambdas[j])
            .expect("rates validated at construction")
    }

    /// All regimes share one uniformization rate.
    pub fn is_uniform(&self) -> bool {
        self.lambdas.iter().all(|&l| l == self.lambdas[0])
    }

    /// Self-loop probability of the skeleton in regime `j`.
    pub fn stay(&self, j: usize, x: usize) -> T {
        let lambda = self.lambdas[j];
        if lambda == T::zero() {
            return T::one();
        }
        (T::one() - self.regimes[j].total_rate(x) / lambda).max(T::zero())
    }

    /// Skeleton transition probability `P_j(from, to)`.
    pub fn prob(&self, j: usize, from: usize, to: usize) -> T {
        if from == to {
            self.stay(j, from)
        } else if self.lambdas[j] == T::zero() {
            T::zero()
        } else {
            self.regimes[j].rate(from, to) / self.lambdas[j]
        }
    }

    /// Skeleton probability for a point placed at time `t`.
    pub fn prob_at(&self, t: T, from: usize, to: usize) -> T {
        self.prob(self.regime_at(t), from, to)
    }

    pub fn lambda_at(&self, t: T) -> T {
        self.lambdas[self.regime_at(t)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64) -> Arc<IntensityMatrix<f64>> {
        Arc::new(IntensityMatrix::from_transitions(2, [(0, 1, a), (1, 0, b)]).unwrap())
    }

    #[test]
    fn lookup_tiles_the_interval() {
        let r = RegimePartition::new(0.0, 1.0, vec![0.25, 0.5], vec![q(1.0, 1.0), q(2.0, 2.0), q(3.0, 3.0)], vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(r.regime_at(0.0), 0);
        assert_eq!(r.regime_at(0.2499), 0);
        assert_eq!(r.regime_at(0.25), 1);
        assert_eq!(r.regime_at(0.5), 2);
        assert_eq!(r.regime_at(1.0), 2);
        assert_eq!(r.bounds(0), (0.0, 0.25));
        assert_eq!(r.bounds(2), (0.5, 1.0));
        let total: f64 = (0..r.count()).map(|j| r.bounds(j).1 - r.bounds(j).0).sum();
        assert_eq!(total, r.duration());
        assert!(!r.is_uniform());
        assert_eq!(r.lambda_at(0.3), 4.0);
        assert_eq!(r.prob_at(0.3, 0, 1), 0.5);
    }

    #[test]
    fn per_regime_skeleton_uses_its_own_rate() {
        let r = RegimePartition::new(0.0, 1.0, vec![0.5], vec![q(4.0, 5.0), q(1.0, 1.0)], vec![12.5, 2.0]).unwrap();
        assert!((r.prob(0, 0, 1) - 0.32).abs() < 1e-12);
        assert_eq!(r.prob(1, 0, 1), 0.5);
        assert_eq!(r.stay(1, 1), 0.5);
        assert_eq!(r.skeleton(0).prob(1, 0), r.prob(0, 1, 0));
    }

    #[test]
    fn policy_sets_multiplied_rates() {
        let regimes = vec![q(4.0, 5.0), q(1.0, 0.0)];
        let r = RegimePartition::with_policy(0.0, 1.0, vec![0.5], regimes.clone(), LambdaPolicy::default()).unwrap();
        assert_eq!(r.lambdas(), &[12.5, 2.5]);
        let uniform = LambdaPolicy { multiplier: 2.0, uniform: true };
        let r = RegimePartition::with_policy(0.0, 1.0, vec![0.5], regimes.clone(), uniform).unwrap();
        assert_eq!(r.lambdas(), &[10.0, 10.0]);
        assert!(r.is_uniform());
        let bad = LambdaPolicy { multiplier: 0.5, uniform: false };
        assert!(RegimePartition::with_policy(0.0, 1.0, vec![0.5], regimes, bad).is_err());
    }

    #[test]
    fn invalid_partitions() {
        assert!(RegimePartition::new(0.0, 1.0, vec![0.5], vec![q(1.0, 1.0)], vec![1.0]).is_err());
        assert!(RegimePartition::new(0.0, 1.0, vec![1.0], vec![q(1.0, 1.0), q(1.0, 1.0)], vec![1.0, 1.0]).is_err());
        assert!(RegimePartition::new(0.0, 1.0, vec![0.6, 0.4], vec![q(1.0, 1.0); 3], vec![1.0; 3]).is_err());
        assert!(RegimePartition::new(0.0, 1.0, vec![], vec![q(2.0, 1.0)], vec![1.0]).is_err());
        let three = Arc::new(IntensityMatrix::<f64>::zeros(3));
        assert!(RegimePartition::new(0.0, 1.0, vec![0.5], vec![q(1.0, 1.0), three], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_rate_regime_never_moves() {
        let r = RegimePartition::single(Arc::new(IntensityMatrix::<f64>::zeros(2)), 0.0, 0.0, 1.0).unwrap();
        assert_eq!(r.prob(0, 0, 0), 1.0);
        assert_eq!(r.prob(0, 0, 1), 0.0);
    }
}
