//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is written against [`Real`], a thin extension of
//! `num_traits::Float`, so the same solver code instantiates at `f32` or
//! `f64`. The crate root exports `f64` type aliases, which is what the CLI
//! and the test suites use; `f32` support exists mainly to keep the math
//! honest about precision assumptions.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used throughout the crate.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lift an `f64` constant into this scalar type.
    ///
    /// Panics only if the type cannot represent ordinary finite constants,
    /// which does not happen for `f32`/`f64`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant must be representable")
    }

    /// Two, which comes up often enough in midpoints to deserve a name.
    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Midpoint of `a` and `b` without overflow concerns for our ranges.
    fn midpoint(a: Self, b: Self) -> Self {
        (a + b) / Self::two()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sum of an iterator of scalars (avoids a `Sum` bound on `Real`).
pub fn sum<R: Real, I: IntoIterator<Item = R>>(iter: I) -> R {
    iter.into_iter().fold(R::zero(), |acc, x| acc + x)
}
