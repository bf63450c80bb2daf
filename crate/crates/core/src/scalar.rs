//! Scalar abstraction shared by every physics and fitting routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Lossy conversion back to `f64` (used at I/O and RNG boundaries).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Unit-peak Lorentzian with full width at half maximum `fwhm`.
#[inline]
pub fn unit_lorentzian<T: Real>(x: T, center: T, fwhm: T) -> T {
    let u = lit::<T>(2.0) * (x - center) / fwhm;
    T::one() / (T::one() + u * u)
}
