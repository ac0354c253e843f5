//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field the analysis runs over. Implemented for `f32` and `f64`.
///
/// Tolerances throughout the crate are expressed as `f64` literals and
/// converted with [`Real::lit`]; the defaults are tuned for `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    fn index(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("index representable")
    }

    #[allow(clippy::eq_op)]
    fn is_nan(self) -> bool {
        self != self
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `max` that lets an infinite or NaN operand win, so failures propagate.
pub(crate) fn fmax<T: Real>(a: T, b: T) -> T {
    if a.is_nan() || b.is_nan() {
        return T::lit(f64::NAN);
    }
    if a >= b {
        a
    } else {
        b
    }
}
