//! Runtime for programs that react to physical objects.
//!
//! Object states are snapshots of real objects (a label, an optional instance
//! id and a photo). Snippets reference them inline as `@state("<id>")`, get
//! attached to an anchor object with a lifespan and an execution budget, and
//! fire when camera detections satisfy their conditions.
//!
//! Geometry is generic over [`Scalar`]; the detection pipeline uses `f64`.

pub mod detector;
pub mod engine;
pub mod ids;
pub mod model;
pub mod num;
pub mod replay;
pub mod script;
pub mod session;
pub mod spatial;
pub mod store;
pub mod wire;

pub use detector::{load_trace, load_trace_file, load_trace_str, match_state, resolve, Detector, SceneTrace, TraceReplayer};
pub use engine::{ActiveAttachment, AttachSpec, Engine, EngineError, TriggerEvent, TriggerEventKind};
pub use model::{
    bbox_center, make_bbox, Action, Attachment, BoundingBox, BoxError, CaptureSource, Detection, ExecutionRecord,
    Frame, ObjectState, Program,
};
pub use num::Scalar;
pub use session::{Session, SessionError};
pub use spatial::{distance, relation_in, relation_on, InParams, OnParams};
pub use store::Store;
pub use wire::EventMsg;

/// Pixel-space box used by detections and traces.
pub type BBox = BoundingBox<f64>;
pub type BBox32 = BoundingBox<f32>;
pub type OnParamsF64 = OnParams<f64>;
pub type InParamsF64 = InParams<f64>;
