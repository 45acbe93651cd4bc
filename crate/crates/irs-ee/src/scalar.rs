//! Scalar abstraction: every numerical module is generic over the real
//! scalar type. `f64` is the default for experiments; `f32` works at
//! correspondingly looser tolerances.

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type: `f32` or `f64`.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {}

impl Real for f32 {}
impl Real for f64 {}

/// Dense complex matrix over the generic scalar.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector over the generic scalar.
pub type CVector<T> = DVector<Complex<T>>;

/// Converts an `f64` constant (tolerances, physical parameters) into `T`.
#[inline]
pub fn conv<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn conv_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

/// log2(x) for the generic scalar.
#[inline]
pub fn log2<T: Real>(x: T) -> T {
    x.ln() / T::ln_2()
}

/// dBm to watts: 10^((dbm - 30)/10).
#[inline]
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    conv::<T>(10.0).powf((dbm - conv(30.0)) / conv(10.0))
}

/// Watts to dBm.
#[inline]
pub fn watts_to_dbm<T: Real>(w: T) -> T {
    conv::<T>(10.0) * w.log10() + conv(30.0)
}
