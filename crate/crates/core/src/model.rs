//! Domain records shared by the interpreter, engine, store and service.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BoxError {
    #[error("degenerate box: requires x1 < x2 and y1 < y2")]
    DegenerateBox,
    #[error("box coordinate is not finite")]
    NonFinite,
    #[error("box coordinate is negative")]
    Negative,
}

/// Axis-aligned box in image pixels, y growing downward.
///
/// Coordinates are real-valued so fractional detector output is kept as is.
/// The constructor guarantees `x1 < x2`, `y1 < y2` and finite, non-negative
/// corners; the fields are private so the invariant cannot be broken later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    x1: T,
    y1: T,
    x2: T,
    y2: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x1: T, y1: T, x2: T, y2: T) -> Result<Self, BoxError> {
        let corners = [x1, y1, x2, y2];
        if corners.iter().any(|v| !v.is_finite()) {
            return Err(BoxError::NonFinite);
        }
        if !(x1 < x2 && y1 < y2) {
            return Err(BoxError::DegenerateBox);
        }
        if corners.iter().any(|v| *v < T::zero()) {
            return Err(BoxError::Negative);
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> T {
        self.x1
    }
    pub fn y1(&self) -> T {
        self.y1
    }
    pub fn x2(&self) -> T {
        self.x2
    }
    pub fn y2(&self) -> T {
        self.y2
    }

    pub fn width(&self) -> T {
        self.x2 - self.x1
    }

    pub fn height(&self) -> T {
        self.y2 - self.y1
    }

    pub fn center(&self) -> (T, T) {
        (
            (self.x1 + self.x2) * T::half(),
            (self.y1 + self.y2) * T::half(),
        )
    }

    pub fn corners(&self) -> [T; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// True when the box lies in `[0, width] x [0, height]` (edges inclusive).
    pub fn fits_within(&self, width: T, height: T) -> bool {
        self.x2 <= width && self.y2 <= height
    }
}

/// Validated constructor.
pub fn make_bbox<T: Scalar>(x1: T, y1: T, x2: T, y2: T) -> Result<BoundingBox<T>, BoxError> {
    BoundingBox::new(x1, y1, x2, y2)
}

pub fn bbox_center<T: Scalar>(b: &BoundingBox<T>) -> (T, T) {
    b.center()
}

impl<T: Scalar + Serialize> Serialize for BoundingBox<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.corners().serialize(serializer)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for BoundingBox<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x1, y1, x2, y2] = <[T; 4]>::deserialize(deserializer)?;
        BoundingBox::new(x1, y1, x2, y2).map_err(D::Error::custom)
    }
}

/// One detector observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub bbox: BoundingBox<f64>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    1.0
}

impl Detection {
    pub fn new(category: impl Into<String>, bbox: BoundingBox<f64>) -> Self {
        Self {
            category: category.into(),
            instance: None,
            bbox,
            confidence: 1.0,
        }
    }

    pub fn with_instance(mut self, instance: impl Into<String>) -> Self {
        self.instance = Some(instance.into());
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.category.is_empty() {
            return Err("detection category is empty".into());
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        Ok(())
    }
}

/// A timestamped set of detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_id: u64,
    pub t_ms: u64,
    #[serde(default)]
    pub detections: Vec<Detection>,
    pub width: u32,
    pub height: u32,
}

impl Frame {
    /// Checks the per-frame invariants (detections valid and inside the frame).
    pub fn validate(&self) -> Result<(), String> {
        for (i, d) in self.detections.iter().enumerate() {
            d.validate().map_err(|e| format!("detection {i}: {e}"))?;
            if !d.bbox.fits_within(f64::from(self.width), f64::from(self.height)) {
                return Err(format!(
                    "detection {i}: bbox {:?} outside {}x{} frame",
                    d.bbox.corners(),
                    self.width,
                    self.height
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureSource {
    Mobile,
    Webcam,
    Synthetic,
}

impl FromStr for CaptureSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mobile" => Ok(Self::Mobile),
            "webcam" => Ok(Self::Webcam),
            "synthetic" => Ok(Self::Synthetic),
            other => Err(format!("unknown capture source {other:?}")),
        }
    }
}

/// Reference to a content-addressed snapshot image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobRef {
    /// Lowercase hex SHA-256 of the blob bytes.
    pub id: String,
    pub media_type: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, rename = "blob", skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<BlobRef>,
    pub source: CaptureSource,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub id: String,
    pub name: String,
    pub source: String,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub id: String,
    pub program_id: String,
    pub anchor_state_id: String,
    pub name: String,
    pub lifespan_min: f64,
    pub max_executions: u32,
    pub created_at: u64,
    pub executions_used: u32,
    pub armed: bool,
}

impl Attachment {
    /// Scene time at which the attachment stops being active.
    pub fn expires_at(&self) -> u64 {
        self.created_at + lifespan_ms(self.lifespan_min)
    }

    pub fn remaining_executions(&self) -> u32 {
        self.max_executions.saturating_sub(self.executions_used)
    }
}

/// Lifespan in whole milliseconds, rounded up for fractional minutes.
pub fn lifespan_ms(lifespan_min: f64) -> u64 {
    (lifespan_min * 60_000.0).ceil() as u64
}

/// Effect requested by a script. The host decides how to realize it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Print { text: String },
    Notify { title: String, message: String },
    Play { media_id: String },
    OpenUrl { url: String },
    SendEmail { to: String, subject: String, body: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub attachment_id: String,
    pub frame_id: u64,
    pub t_ms: u64,
    pub actions: Vec<Action>,
    pub console: Vec<String>,
}

impl fmt::Display for CaptureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mobile => "mobile",
            Self::Webcam => "webcam",
            Self::Synthetic => "synthetic",
        })
    }
}
