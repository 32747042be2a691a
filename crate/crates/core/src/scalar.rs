//! Floating-point abstraction shared by the numerical modules.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the spectral solvers, encoder, discourse extractor and
/// ranker are generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn from_single(value: f32) -> Self {
        <Self as FromPrimitive>::from_f32(value).expect("f32 representable")
    }

    fn from_count(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("usize representable")
    }

    /// Machine epsilon of the type.
    fn machine_eps() -> Self;

    fn is_finite_value(self) -> bool;
}

impl Scalar for f32 {
    fn machine_eps() -> Self {
        f32::EPSILON
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn machine_eps() -> Self {
        f64::EPSILON
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}
