//! Scalar abstractions.
//!
//! Floating-point code is generic over [`Real`] (implemented for `f32` and
//! `f64`). Estimators whose entries are exact ratios of integer counts
//! (indicator dictionaries) can also run over [`ExactField`], which covers
//! big rationals.

use std::fmt::Debug;
use std::ops::Neg;

use nalgebra::RealField;
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Floating-point scalar used by the numerical core.
pub trait Real: RealField + ExactField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working precision.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in working precision")
}

/// Widens a working-precision value to `f64` for diagnostics and I/O.
#[inline]
pub fn wide<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// A field with exact or floating arithmetic, usable by the pivoted
/// Gaussian elimination in [`crate::linalg::solve`].
pub trait ExactField: Clone + PartialEq + Debug + Num + Neg<Output = Self> + 'static {
    /// Size estimate used only to pick pivots. Zero must map to zero.
    fn magnitude(&self) -> f64;
}

impl ExactField for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl ExactField for f32 {
    fn magnitude(&self) -> f64 {
        f64::from(self.abs())
    }
}

impl ExactField for BigRational {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

impl ExactField for Ratio<i64> {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Exact rational `num / den` for count-based matrices.
pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
