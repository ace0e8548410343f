//! Spatial relations between bounding boxes: `In`, `On` and `Distance`.
//!
//! All three work in raw image pixels with y growing downward.

use thiserror::Error;

use crate::model::BoundingBox;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ParamError {
    #[error("On overlap ratio must be in (0, 1], got {0}")]
    OverlapRatio(f64),
    #[error("In slack must be finite and >= 0, got {0}")]
    Slack(f64),
}

/// Tuning for [`relation_on`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnParams<T> {
    /// Minimum fraction of `a`'s width that must overlap `b` horizontally.
    theta_h: T,
}

impl<T: Scalar> OnParams<T> {
    pub const DEFAULT_THETA_H: f64 = 0.5;

    pub fn new(theta_h: T) -> Result<Self, ParamError> {
        if theta_h > T::zero() && theta_h <= T::one() {
            Ok(Self { theta_h })
        } else {
            Err(ParamError::OverlapRatio(theta_h.to_f64().unwrap_or(f64::NAN)))
        }
    }

    pub fn theta_h(&self) -> T {
        self.theta_h
    }
}

impl<T: Scalar> Default for OnParams<T> {
    fn default() -> Self {
        Self {
            theta_h: T::lit(Self::DEFAULT_THETA_H),
        }
    }
}

/// Tuning for [`relation_in`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InParams<T> {
    /// Pixels by which `a` may stick out of `b` on each side.
    eps: T,
}

impl<T: Scalar> InParams<T> {
    pub fn new(eps: T) -> Result<Self, ParamError> {
        if eps.is_finite() && eps >= T::zero() {
            Ok(Self { eps })
        } else {
            Err(ParamError::Slack(eps.to_f64().unwrap_or(f64::NAN)))
        }
    }

    pub fn eps(&self) -> T {
        self.eps
    }
}

impl<T: Scalar> Default for InParams<T> {
    fn default() -> Self {
        Self { eps: T::zero() }
    }
}

/// `a` is contained in `b`, boundaries inclusive, with `eps` slack.
pub fn relation_in<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>, p: InParams<T>) -> bool {
    let eps = p.eps;
    a.x1() >= b.x1() - eps && a.y1() >= b.y1() - eps && a.x2() <= b.x2() + eps && a.y2() <= b.y2() + eps
}

/// Width of the horizontal overlap between two boxes, zero when disjoint.
pub fn horizontal_overlap<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let lo = a.x1().max(b.x1());
    let hi = a.x2().min(b.x2());
    (hi - lo).max(T::zero())
}

/// `a` rests upon `b`.
///
/// Holds when most of `a`'s width overlaps `b` (ratio at least `theta_h`),
/// `a`'s bottom edge lies within `b`'s vertical extent, and `a`'s center is
/// not below `b`'s center.
pub fn relation_on<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>, p: OnParams<T>) -> bool {
    let hov = horizontal_overlap(a, b);
    if hov / a.width() < p.theta_h {
        return false;
    }
    if !(b.y1() <= a.y2() && a.y2() <= b.y2()) {
        return false;
    }
    a.center().1 <= b.center().1
}

/// Euclidean distance between box centers, in pixels.
pub fn distance<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}
