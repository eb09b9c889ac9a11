//! Scalar abstraction shared by every solver in the crate.
//!
//! All numerics are written against [`Scalar`], which is satisfied by `f32` and `f64`.
//! The accuracy targets quoted throughout the tests assume `f64`.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating-point scalar usable by the solvers.
pub trait Scalar: RealField + Copy + ToPrimitive + Send + Sync + 'static {
    /// Machine epsilon of the type.
    fn epsilon() -> Self;

    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self;

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn of(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
    fn of(x: f64) -> Self {
        x as f32
    }
}
