//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Euclid, Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point pixel/parameter type: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + Euclid + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal or parameter.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
