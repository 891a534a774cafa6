//! Scalar abstraction: the floating-point type the whole simulation runs on.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar the simulation is generic over (`f32` or `f64`).
///
/// Besides the usual numeric traits this carries the two random draws the
/// simulation needs, so call sites do not repeat `rand_distr` bounds.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Draw from the standard normal distribution N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from [0, 1).
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless-enough conversion from `f64` (panics only on NaN-free
    /// constants that cannot be represented, which none of ours are).
    fn from_f64_c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen()
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen()
    }
}

/// dB-Hz to linear carrier-to-noise-density ratio.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::from_f64_c(10.0).powf(db / T::from_f64_c(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0f64), 1.0);
        assert!((db_to_linear(10.0f64) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(40.0f64) - 1e4).abs() < 1e-7);
        assert!((db_to_linear(30.0f32) - 1e3).abs() < 1e-2);
    }
}
