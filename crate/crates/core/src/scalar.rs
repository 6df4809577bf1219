//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Real floating-point type the simulator is generic over.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale the
/// validation thresholds to the precision of the type, so that a state that
/// is "trace one" in `f64` is checked at `1e-12` while the same state in
/// `f32` is checked at a level single precision can actually meet.
pub trait Real: Float + FloatConst + FftNum + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Tolerance for normalization, Hermiticity, trace and positivity checks.
    const STATE_TOL: Self;
    /// Branch probabilities below this are treated as degenerate.
    const BRANCH_TOL: Self;

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    /// Converts an index or count into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const STATE_TOL: f64 = 1e-12;
    const BRANCH_TOL: f64 = 1e-14;
}

impl Real for f32 {
    const STATE_TOL: f32 = 1e-5;
    const BRANCH_TOL: f32 = 1e-7;
}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}
