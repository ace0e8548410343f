//! A store and an engine driven together under one scene clock.
//!
//! Every mutation goes through here so that the engine's in-memory view and
//! the persisted documents stay in step, and so that each mutation yields
//! the wire events describing it.

use thiserror::Error;

use crate::engine::{ActiveAttachment, AttachSpec, Engine, EngineError, TriggerEventKind};
use crate::model::{Attachment, CaptureSource, ExecutionRecord, Frame, ObjectState, Program};
use crate::script::{self, EvalContext, EvalOutcome, SyntaxError};
use crate::store::{ImageUpload, Store, StoreError};
use crate::wire::EventMsg;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid frame: {0}")]
    Frame(String),
}

/// Result of ingesting one frame.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub overlay: EventMsg,
    pub events: Vec<EventMsg>,
}

#[derive(Debug)]
pub struct Session {
    store: Store,
    engine: Engine,
    clock: u64,
    last_frame: Option<(u64, u64)>,
}

impl Session {
    /// Loads every stored program and attachment into a fresh engine.
    /// Attachments whose program no longer parses are dropped.
    pub fn new(store: Store) -> Result<Self, SessionError> {
        let mut engine = Engine::new();
        let mut store = store;
        for p in store.list_programs() {
            engine.load_program(&p)?;
        }
        for a in store.list_attachments() {
            if engine.restore(a.clone()).is_err() {
                store.delete_attachment(&a.id)?;
            }
        }
        Ok(Self {
            store,
            engine,
            clock: 0,
            last_frame: None,
        })
    }

    /// Scene time in ms: the latest ingested frame time, or the start time.
    pub fn now(&self) -> u64 {
        self.clock
    }

    pub fn set_clock(&mut self, t_ms: u64) {
        self.clock = self.clock.max(t_ms);
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn create_state(
        &mut self,
        category: &str,
        instance: Option<&str>,
        image: Option<ImageUpload>,
        source: CaptureSource,
    ) -> Result<(ObjectState, Vec<EventMsg>), SessionError> {
        let state = self.store.put_state(category, instance, image, source, self.clock)?;
        let ev = EventMsg::state_created(&state, self.clock);
        Ok((state, vec![ev]))
    }

    /// Adds a state that already has an id (imports, synthetic registries).
    pub fn import_state(&mut self, state: ObjectState) -> Result<Vec<EventMsg>, SessionError> {
        self.store.insert_state(state.clone())?;
        Ok(vec![EventMsg::state_created(&state, self.clock)])
    }

    pub fn delete_state(&mut self, id: &str) -> Result<Vec<EventMsg>, SessionError> {
        self.store.delete_state(id)?;
        let mut events: Vec<EventMsg> = self
            .engine
            .detach_anchored(id, self.clock)
            .into_iter()
            .map(EventMsg::from)
            .collect();
        events.push(EventMsg::state_deleted(id, self.clock));
        Ok(events)
    }

    pub fn create_program(&mut self, name: &str, source: &str) -> Result<Program, SessionError> {
        let program = self.store.put_program(name, source, self.clock)?;
        self.engine.load_program(&program)?;
        Ok(program)
    }

    pub fn update_program(&mut self, id: &str, name: Option<&str>, source: &str) -> Result<Program, SessionError> {
        let program = self.store.update_program(id, name, source)?;
        self.engine.load_program(&program)?;
        Ok(program)
    }

    pub fn delete_program(&mut self, id: &str) -> Result<Vec<EventMsg>, SessionError> {
        self.store.delete_program(id)?;
        Ok(self
            .engine
            .unload_program(id, self.clock)
            .into_iter()
            .map(EventMsg::from)
            .collect())
    }

    pub fn attach(&mut self, spec: &AttachSpec) -> Result<(Attachment, Vec<EventMsg>), SessionError> {
        if self.store.get_program(&spec.program_id).is_none() {
            return Err(EngineError::UnknownProgram(spec.program_id.clone()).into());
        }
        let id = self.store.new_attachment_id();
        let (attachment, event) = self.engine.attach(id, spec, &self.store, self.clock)?;
        if let Err(e) = self.store.put_attachment(&attachment) {
            let _ = self.engine.detach(&attachment.id, self.clock);
            return Err(e.into());
        }
        Ok((attachment, vec![event.into()]))
    }

    pub fn detach(&mut self, id: &str) -> Result<Vec<EventMsg>, SessionError> {
        let event = self.engine.detach(id, self.clock)?;
        self.store.delete_attachment(id)?;
        Ok(vec![event.into()])
    }

    pub fn list_active(&self) -> Vec<ActiveAttachment> {
        self.engine.list_active(self.clock)
    }

    pub fn read_logs(&self, attachment_id: &str) -> Result<Vec<ExecutionRecord>, SessionError> {
        Ok(self.store.read_logs(attachment_id)?)
    }

    /// Validates a frame against the session's ordering rules, steps the
    /// engine, and persists the resulting attachment changes and logs.
    pub fn ingest(&mut self, frame: &Frame) -> Result<StepOutput, SessionError> {
        if frame.width == 0 || frame.height == 0 {
            return Err(SessionError::Frame("width and height must be positive".into()));
        }
        frame.validate().map_err(SessionError::Frame)?;
        if let Some((last_id, last_t)) = self.last_frame {
            if frame.frame_id <= last_id {
                return Err(SessionError::Frame(format!(
                    "frame_id {} not after previous frame {last_id}",
                    frame.frame_id
                )));
            }
            if frame.t_ms < last_t {
                return Err(SessionError::Frame(format!(
                    "t_ms {} earlier than previous frame {last_t}",
                    frame.t_ms
                )));
            }
        }
        if frame.t_ms < self.clock {
            return Err(SessionError::Frame(format!(
                "t_ms {} earlier than scene clock {}",
                frame.t_ms, self.clock
            )));
        }
        self.last_frame = Some((frame.frame_id, frame.t_ms));
        self.clock = frame.t_ms;

        let overlay = EventMsg::overlay(frame, &self.store.list_states());
        let events = self.engine.step(frame, &self.store);
        for ev in &events {
            match &ev.kind {
                TriggerEventKind::Triggered { record } => self.store.append_log(record)?,
                TriggerEventKind::Expired | TriggerEventKind::Exhausted => {
                    self.store.delete_attachment(&ev.attachment_id)?;
                }
                _ => {}
            }
        }
        let changed: Vec<Attachment> = self
            .engine
            .attachments()
            .filter(|a| self.store.get_attachment(&a.id) != Some(a))
            .cloned()
            .collect();
        for a in &changed {
            self.store.put_attachment(a)?;
        }
        Ok(StepOutput {
            overlay,
            events: events.into_iter().map(EventMsg::from).collect(),
        })
    }

    /// One-off dry-run evaluation against the current registry.
    pub fn eval_dry(&self, source: &str, frame: &Frame) -> Result<EvalOutcome, SessionError> {
        let module = script::parse_source(source)?;
        let ctx = EvalContext::new(frame, &self.store).dry_run(true);
        Ok(script::evaluate(&module, &ctx))
    }
}
