//! Offline pipeline: trace in, lifecycle event log out.

use thiserror::Error;

use crate::detector::SceneTrace;
use crate::engine::AttachSpec;
use crate::ids::IdGenerator;
use crate::model::{CaptureSource, ObjectState};
use crate::script::SyntaxError;
use crate::session::{Session, SessionError};
use crate::store::Store;
use crate::wire::EventMsg;

#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    /// First registry state (by creation time, then id) with this category.
    Category(String),
    StateId(String),
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub anchor: Anchor,
    pub name: String,
    pub lifespan_min: f64,
    pub max_executions: u32,
    pub id_seed: u64,
    /// Registry to resolve descriptors against. When `None`, one synthetic
    /// state per trace category is created, with the category as its id.
    pub registry: Option<Vec<ObjectState>>,
}

impl ReplayOptions {
    pub fn new(anchor: Anchor, lifespan_min: f64, max_executions: u32) -> Self {
        Self {
            anchor,
            name: "replay".into(),
            lifespan_min,
            max_executions,
            id_seed: 0,
            registry: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("program error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Runtime(String),
}

impl From<SessionError> for ReplayError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Syntax(s) => ReplayError::Syntax(s),
            SessionError::Store(crate::store::StoreError::Parse(s)) => ReplayError::Syntax(s),
            other => ReplayError::Runtime(other.to_string()),
        }
    }
}

/// One synthetic state per distinct category, in order of first appearance.
pub fn synthetic_registry(trace: &SceneTrace) -> Vec<ObjectState> {
    let mut out: Vec<ObjectState> = Vec::new();
    for d in trace.frames.iter().flat_map(|f| &f.detections) {
        if !out.iter().any(|s| s.category == d.category) {
            out.push(ObjectState {
                id: d.category.clone(),
                category: d.category.clone(),
                instance: None,
                image_ref: None,
                source: CaptureSource::Synthetic,
                created_at: 0,
            });
        }
    }
    out
}

/// Replays `trace` against a single attachment of `program_source`.
///
/// The returned log holds the attachment's lifecycle events (attached,
/// triggered, expired, exhausted, evaluation errors) in emission order.
pub fn replay(trace: &SceneTrace, program_source: &str, opts: &ReplayOptions) -> Result<Vec<EventMsg>, ReplayError> {
    let store = Store::in_memory().with_ids(IdGenerator::seeded(opts.id_seed));
    let mut session = Session::new(store)?;
    let registry = match &opts.registry {
        Some(r) => r.clone(),
        None => synthetic_registry(trace),
    };
    for mut state in registry {
        state.image_ref = None;
        session.import_state(state)?;
    }
    let program = session.create_program(&opts.name, program_source)?;
    let anchor_id = match &opts.anchor {
        Anchor::StateId(id) => id.clone(),
        Anchor::Category(cat) => session
            .store()
            .list_states()
            .into_iter()
            .find(|s| &s.category == cat)
            .map(|s| s.id)
            .ok_or_else(|| ReplayError::Runtime(format!("no object state with category {cat:?}")))?,
    };
    let (_, mut log) = session.attach(&AttachSpec {
        program_id: program.id,
        anchor_state_id: anchor_id,
        name: opts.name.clone(),
        lifespan_min: opts.lifespan_min,
        max_executions: opts.max_executions,
    })?;
    for frame in trace.frames() {
        let out = session.ingest(&frame)?;
        log.extend(out.events);
    }
    Ok(log)
}
