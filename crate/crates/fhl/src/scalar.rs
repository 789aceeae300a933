//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the library computes in (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal; every finite `f64` is representable up to rounding.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn of_usize(k: usize) -> Self {
        Self::from_usize(k).expect("index fits in a float")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon scaled for tolerance checks.
    #[inline]
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x^a - y^a` without catastrophic cancellation when `x ≈ y`.
pub fn pow_diff<T: Real>(x: T, y: T, a: T) -> T {
    if x == y {
        return T::zero();
    }
    if y <= T::zero() || x <= T::zero() {
        return x.powf(a) - y.powf(a);
    }
    let r = (x / y).ln();
    y.powf(a) * (a * r).exp_m1()
}
