//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `-1`, `0` or `1`; zero maps to zero.
    fn signum0(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Smallest denominator magnitude admitted by guarded division.
pub const DIV_FLOOR: f64 = 1e-6;

/// Offset added under `sqrt` and `log` so both stay finite (with finite
/// derivatives) at zero.
pub const ABS_EPS: f64 = 1e-9;

/// `sign(d) * max(|d|, DIV_FLOOR)`. A zero denominator is pushed to `+DIV_FLOOR`.
pub fn guard_denominator<T: Scalar>(d: T) -> T {
    let floor = T::lit(DIV_FLOOR);
    if d.abs() >= floor {
        d
    } else if d < T::zero() {
        -floor
    } else {
        floor
    }
}
