//! Scalar abstraction for the subset-lattice calculus.
//!
//! The Möbius transforms, the binomial statistic and the α/β transforms only
//! need ring operations, so they are written against [`Scalar`] and run
//! unchanged on `f32`, `f64` and exact rationals. Entropies and logarithmic
//! quantities additionally require [`num_traits::Float`].

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::Debug;

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Slack allowed when checking sign and equality constraints.
    /// Exact types use zero.
    fn tolerance() -> Self;

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("integer fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl Scalar for Ratio<i128> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
}
