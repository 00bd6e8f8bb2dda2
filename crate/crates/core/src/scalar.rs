//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;

/// Floating point type the engine is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or computed value into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("value representable in scalar type")
    }

    /// Converts a count into `Self`.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Draws a point strictly inside `(lo, hi)`.
///
/// The draw is made in `f64` and rounded into `T`; draws that round onto an
/// endpoint are redrawn.
pub fn uniform_open<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    debug_assert!(lo < hi);
    let (l, h) = (lo.as_f64(), hi.as_f64());
    loop {
        let u: f64 = rng.random();
        let t = T::lit(l + (h - l) * u);
        if t > lo && t < hi {
            return t;
        }
    }
}

/// Log of a nonnegative quantity, mapping zero to negative infinity.
pub(crate) fn ln0<T: Real>(x: T) -> T {
    if x > T::zero() {
        x.ln()
    } else {
        T::neg_infinity()
    }
}

/// Numerically stable `log(sum(exp(xs)))`.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
