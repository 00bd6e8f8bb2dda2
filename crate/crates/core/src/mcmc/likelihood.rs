use crate::markov::MarkedPath;
use crate::scalar::Real;

/// Log-likelihood of the evidence as a function of a marked path.
///
/// Implementations must depend on the path only through its collapsed
/// sample path, so inserting or removing virtual points never changes the
/// value.
pub trait LikelihoodEvaluator<T> {
    fn log_likelihood(&self, path: &MarkedPath<T>) -> T;

    /// The part of the log-likelihood driven by the path on the window
    /// `(lo, hi]`, for paths that agree outside the window.
    ///
    /// Differences of window values between two such paths must equal the
    /// difference of full values. `None` means the evaluator offers no
    /// incremental form.
    fn log_likelihood_window(&self, path: &MarkedPath<T>, lo: T, hi: T) -> Option<T> {
        let _ = (path, lo, hi);
        None
    }
}

/// `L = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlatLikelihood;

impl<T: Real> LikelihoodEvaluator<T> for FlatLikelihood {
    fn log_likelihood(&self, _path: &MarkedPath<T>) -> T {
        T::zero()
    }

    fn log_likelihood_window(&self, _path: &MarkedPath<T>, _lo: T, _hi: T) -> Option<T> {
        Some(T::zero())
    }
}

/// Wraps a closure over the collapsed path computed on demand.
pub struct FnLikelihood<F>(pub F);

impl<T: Real, F> LikelihoodEvaluator<T> for FnLikelihood<F>
where
    F: Fn(&MarkedPath<T>) -> T,
{
    fn log_likelihood(&self, path: &MarkedPath<T>) -> T {
        (self.0)(path)
    }
}
