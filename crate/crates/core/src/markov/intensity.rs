use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Off-diagonal jump rates of a homogeneous Markov jump process on
/// `{0, .., size - 1}`.
///
/// Rows are stored as lists of strictly positive `(target, rate)` entries.
/// The diagonal is never stored; it is always `-total_rate(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMatrix<T> {
    rows: Vec<Vec<(usize, T)>>,
    totals: Vec<T>,
    max_rate: T,
}

impl<T: Real> IntensityMatrix<T> {
    /// The matrix with no jumps at all.
    pub fn zeros(size: usize) -> Self {
        Self {
            rows: vec![Vec::new(); size],
            totals: vec![T::zero(); size],
            max_rate: T::zero(),
        }
    }

    /// Builds the matrix from a list of `(from, to, rate)` transitions.
    ///
    /// Zero rates are dropped, repeated pairs are summed, and self loops are
    /// rejected.
    pub fn from_transitions<I>(size: usize, transitions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); size];
        for (from, to, rate) in transitions {
            if from >= size || to >= size {
                return Err(Error::InvalidIntensity(format!(
                    "transition {from} -> {to} outside alphabet of size {size}"
                )));
            }
            if from == to {
                return Err(Error::InvalidIntensity(format!(
                    "self transition {from} -> {to} is not a jump"
                )));
            }
            if !(rate >= T::zero()) || !rate.is_finite() {
                return Err(Error::InvalidIntensity(format!(
                    "rate {rate} for {from} -> {to} must be finite and nonnegative"
                )));
            }
            if rate == T::zero() {
                continue;
            }
            match rows[from].iter_mut().find(|(t, _)| *t == to) {
                Some(entry) => entry.1 += rate,
                None => rows[from].push((to, rate)),
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(to, _)| to);
        }
        Ok(Self::from_rows_unchecked(rows))
    }

    /// Builds the matrix from a dense square array.
    ///
    /// Diagonal entries are ignored; they are derived from the off-diagonal
    /// rates.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let size = rows.len();
        let mut transitions = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidIntensity(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            for (j, &rate) in row.iter().enumerate() {
                if i != j {
                    transitions.push((i, j, rate));
                }
            }
        }
        Self::from_transitions(size, transitions)
    }

    fn from_rows_unchecked(rows: Vec<Vec<(usize, T)>>) -> Self {
        let totals: Vec<T> = rows
            .iter()
            .map(|row| row.iter().map(|&(_, r)| r).sum())
            .collect();
        let max_rate = totals.iter().copied().fold(T::zero(), T::max);
        Self {
            rows,
            totals,
            max_rate,
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Jump rate `Q(from, to)` for `from != to`; zero on the diagonal.
    pub fn rate(&self, from: usize, to: usize) -> T {
        self.rows[from]
            .iter()
            .find(|&&(t, _)| t == to)
            .map_or(T::zero(), |&(_, r)| r)
    }

    /// Generator entry including the diagonal `-Q(x)`.
    pub fn generator(&self, from: usize, to: usize) -> T {
        if from == to {
            -self.totals[from]
        } else {
            self.rate(from, to)
        }
    }

    /// Total exit rate `Q(x)`.
    pub fn total_rate(&self, from: usize) -> T {
        self.totals[from]
    }

    pub fn max_rate(&self) -> T {
        self.max_rate
    }

    /// Nonzero off-diagonal entries of row `from`, sorted by target.
    pub fn row(&self, from: usize) -> &[(usize, T)] {
        &self.rows[from]
    }

    /// Dense generator with the derived diagonal.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.generator(i, j)).collect())
            .collect()
    }

    /// Reorders states: state `x` becomes `perm[x]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut rows = vec![Vec::new(); self.size()];
        for (from, row) in self.rows.iter().enumerate() {
            rows[perm[from]] = row.iter().map(|&(to, r)| (perm[to], r)).collect();
            rows[perm[from]].sort_by_key(|&(to, _): &(usize, T)| to);
        }
        Self::from_rows_unchecked(rows)
    }
}

/// Transition matrix of the redundant skeleton chain obtained by
/// uniformizing an intensity matrix at rate `lambda`.
///
/// `P(x, x') = Q(x, x') / lambda` off the diagonal and
/// `P(x, x) = 1 - Q(x) / lambda`. Entries are evaluated on demand from the
/// shared intensity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonMatrix<T> {
    lambda: T,
    intensity: Arc<IntensityMatrix<T>>,
}

/// Uniformizes `q` at rate `lambda`.
pub fn uniformize<T: Real>(q: &IntensityMatrix<T>, lambda: T) -> Result<SkeletonMatrix<T>> {
    SkeletonMatrix::new(Arc::new(q.clone()), lambda)
}

impl<T: Real> SkeletonMatrix<T> {
    pub fn new(intensity: Arc<IntensityMatrix<T>>, lambda: T) -> Result<Self> {
        let max_rate = intensity.max_rate();
        if !lambda.is_finite() || lambda < max_rate || lambda < T::zero() {
            return Err(Error::RateBelowMaximum {
                lambda: lambda.as_f64(),
                max_rate: max_rate.as_f64(),
            });
        }
        Ok(Self { lambda, intensity })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn intensity(&self) -> &IntensityMatrix<T> {
        &self.intensity
    }

    pub fn size(&self) -> usize {
        self.intensity.size()
    }

    /// Self-loop probability `1 - Q(x)/lambda`, clamped at zero against
    /// rounding. A zero `lambda` only arises with `Q = 0` and gives 1.
    pub fn stay(&self, x: usize) -> T {
        if self.lambda == T::zero() {
            return T::one();
        }
        (T::one() - self.intensity.total_rate(x) / self.lambda).max(T::zero())
    }

    /// Skeleton transition probability `P(from, to)`.
    pub fn prob(&self, from: usize, to: usize) -> T {
        if from == to {
            self.stay(from)
        } else if self.lambda == T::zero() {
            T::zero()
        } else {
            self.intensity.rate(from, to) / self.lambda
        }
    }

    /// Nonzero entries of row `from` including the self loop.
    pub fn support(&self, from: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let stay = self.stay(from);
        let lambda = self.lambda;
        std::iter::once((from, stay))
            .filter(|&(_, p)| p > T::zero())
            .chain(
                self.intensity
                    .row(from)
                    .iter()
                    .filter(move |_| lambda > T::zero())
                    .map(move |&(to, r)| (to, r / lambda)),
            )
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.prob(i, j)).collect())
            .collect()
    }
}
