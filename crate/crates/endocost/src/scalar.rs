//! Scalar abstraction for the numeric core.
//!
//! All simulator math is written against [`Scalar`] so the same code runs in
//! `f32` or `f64`. The crate root exposes `f64` aliases, which are what the
//! harness and CLI use.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for types that cannot
    /// represent ordinary finite constants.
    fn from_real(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("finite f64 constant must convert")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar must convert to f64")
    }

    fn from_usize_exact(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("usize must convert")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
