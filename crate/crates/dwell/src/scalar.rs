//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rand::distributions::uniform::SampleUniform;

/// Floating-point scalar the whole numeric core is generic over.
///
/// `FftNum` brings `Signed`, whose `abs` collides with `Float::abs` in
/// generic code; use [`fabs`] (or fully qualified calls) where it matters.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + rustfft::FftNum
    + SampleUniform
    + Sum<Self>
    + Display
    + LowerExp
    + Debug
    + Default
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for lifting an f64 literal into the generic scalar.
#[inline]
pub fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("literal representable in scalar type")
}

/// `Float::abs`, named to dodge the `Float`/`Signed` method collision.
#[inline]
pub fn fabs<R: Real>(x: R) -> R {
    Float::abs(x)
}
