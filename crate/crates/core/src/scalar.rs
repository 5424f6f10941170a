//! Scalar abstraction shared by every numerical module.
//!
//! All state, operator and integrator code is written against [`Real`], so the
//! same routines run in `f32` for quick checks and in `f64` for production
//! runs. Complex amplitudes are always `num_complex::Complex<R>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; panics only for non-representable values,
    /// which cannot happen for the float types implementing this trait.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a [`Real`] scalar.
pub type C<R> = Complex<R>;

#[inline]
pub(crate) fn czero<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::zero())
}

#[inline]
pub(crate) fn cone<R: Real>() -> C<R> {
    Complex::new(R::one(), R::zero())
}

/// `-i * z`
#[inline]
pub(crate) fn mul_neg_i<R: Real>(z: C<R>) -> C<R> {
    Complex::new(z.im, -z.re)
}

/// `ln(n!)` by direct summation; exact enough for the cutoffs used here.
pub(crate) fn ln_factorial<R: Real>(n: usize) -> R {
    (2..=n).map(|k| R::from_usize_exact(k).ln()).sum()
}
