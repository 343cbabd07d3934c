//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All probability computations are written against [`Real`], which is
//! implemented for `f32` and `f64`. The tolerances that validate a pmf or
//! clamp roundoff depend on the precision, so they live on the trait.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar usable by the lattice engine.
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Display + Debug + Default {
    /// Allowed deviation of `mass + defect` from one.
    const MASS_TOL: Self;
    /// Negative cells above `-ROUNDOFF_CLAMP` are treated as roundoff.
    const ROUNDOFF_CLAMP: Self;

    /// Converts an `f64` literal. Every value used in the crate is finite,
    /// so the conversion cannot fail for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("i64 fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f64 {
    const MASS_TOL: f64 = 1e-12;
    const ROUNDOFF_CLAMP: f64 = 1e-12;
}

impl Real for f32 {
    const MASS_TOL: f32 = 1e-5;
    const ROUNDOFF_CLAMP: f32 = 1e-5;
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}
