//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All estimators are written against [`Real`], which is implemented for
//! `f32` and `f64`. Linear algebra goes through `nalgebra`, so the trait
//! builds on its `RealField`; conversions to and from literals use
//! `num-traits`.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    /// Widens to `f64` for reporting and serialization.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the concrete type.
    fn machine_epsilon() -> Self;
}

impl Real for f32 {
    fn machine_epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn machine_epsilon() -> Self {
        f64::EPSILON
    }
}
