use nalgebra::{DMatrix, DVector};

use crate::markov::IntensityMatrix;
use crate::scalar::Real;

/// Dense generator `Q` with `-Q(x)` on the diagonal, in `f64`.
pub fn dense_generator<T: Real>(q: &IntensityMatrix<T>) -> DMatrix<f64> {
    let n = q.size();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for &(j, r) in q.row(i) {
            m[(i, j)] += r.as_f64();
        }
        m[(i, i)] -= q.total_rate(i).as_f64();
    }
    m
}

/// `nu exp(Q t)`, the law at time `t` of the process started from `nu`.
pub fn transient_distribution<T: Real>(q: &IntensityMatrix<T>, initial: &[T], t: T) -> Vec<T> {
    let e = (dense_generator(q) * t.as_f64()).exp();
    let nu = DVector::from_iterator(initial.len(), initial.iter().map(|x| x.as_f64()));
    (e.transpose() * nu).iter().map(|&x| T::lit(x)).collect()
}
