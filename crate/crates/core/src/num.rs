//! Scalar abstraction for the geometry and spatial code.

use std::fmt;

use num_traits::{Float, FromPrimitive};

/// Floating point coordinate type usable by [`BoundingBox`](crate::BoundingBox)
/// and the spatial relations.
pub trait Scalar: Float + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Lossy conversion from `f64`, used for default parameters.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
