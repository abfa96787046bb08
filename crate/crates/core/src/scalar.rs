use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real number type the dense path is computed in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Tag written into serialized parameter files.
    const NAME: &'static str;
    /// Significant digits emitted when rendering a non-integer value.
    const RENDER_DIGITS: usize;

    /// Relative distance to the nearest integer below which a value renders bare.
    fn snap_tolerance() -> Self;

    fn from_digit(d: u8) -> Self {
        Self::from_u8(d).expect("digit fits every float type")
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits every float type")
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
    const RENDER_DIGITS: usize = 12;

    fn snap_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
    const RENDER_DIGITS: usize = 6;

    fn snap_tolerance() -> Self {
        1e-5
    }
}
