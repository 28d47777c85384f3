//! Scalar abstraction shared by every numeric module.
//!
//! All matrix math is written against [`Real`], which is implemented for
//! `f32` and `f64`. Complex quantities are `nalgebra::Complex<T>`.

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point scalar usable by the simulation core.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + 'static
{
    /// Machine epsilon of the underlying type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Complex matrix over `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Complex column vector over `T`.
pub type CVector<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in target scalar")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
