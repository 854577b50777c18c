//! Scalar abstraction shared by the geometric core.
//!
//! Everything that is pure geometry (vectors, ellipsoids, cones, ray
//! solves) is written against [`Real`] so it can run in `f32` for bulk
//! visualisation work or `f64` for the accuracy-gated paths.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the geometric core: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        // Infallible for f32/f64; overflow saturates to +/-inf.
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
