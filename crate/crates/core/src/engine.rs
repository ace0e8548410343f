//! Attach/trigger lifecycle.
//!
//! Each frame, expired attachments are dropped first. The remaining ones are
//! evaluated in ascending id order, but only when their anchor is visible.
//! Firing is edge-triggered: an attachment that fired is disarmed until an
//! evaluation comes back without firing.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::resolve;
use crate::model::{Attachment, ExecutionRecord, Frame, Program};
use crate::script::{self, EvalContext, Module, RuntimeError, StateLookup, SyntaxError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown program {0}")]
    UnknownProgram(String),
    #[error("unknown object state {0}")]
    UnknownState(String),
    #[error("unknown attachment {0}")]
    UnknownAttachment(String),
    #[error("invalid attachment parameters: {0}")]
    InvalidParams(String),
    #[error("attachment {0} already exists")]
    DuplicateAttachment(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TriggerEventKind {
    Attached { attachment: Attachment },
    Triggered { record: ExecutionRecord },
    Expired,
    Exhausted,
    Detached,
    EvalError { error: RuntimeError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub attachment_id: String,
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: TriggerEventKind,
}

/// Parameters of a new attachment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachSpec {
    pub program_id: String,
    pub anchor_state_id: String,
    pub name: String,
    pub lifespan_min: f64,
    pub max_executions: u32,
}

impl AttachSpec {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.lifespan_min.is_finite() && self.lifespan_min > 0.0) {
            return Err(EngineError::InvalidParams(format!(
                "lifespan_min must be positive, got {}",
                self.lifespan_min
            )));
        }
        if self.max_executions < 1 {
            return Err(EngineError::InvalidParams("max_executions must be at least 1".into()));
        }
        Ok(())
    }
}

/// An attachment as listed for display, with its remaining budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveAttachment {
    #[serde(flatten)]
    pub attachment: Attachment,
    pub expires_at: u64,
    pub remaining_ms: u64,
    pub remaining_executions: u32,
}

#[derive(Debug)]
struct Entry {
    attachment: Attachment,
    program: Arc<Module>,
}

#[derive(Debug)]
pub struct Engine {
    programs: BTreeMap<String, Arc<Module>>,
    attachments: BTreeMap<String, Entry>,
    step_budget: u64,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        Self {
            programs: BTreeMap::new(),
            attachments: BTreeMap::new(),
            step_budget: script::DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget.max(1);
        self
    }

    /// Parses and caches a program. Live attachments pick up the new code.
    pub fn load_program(&mut self, program: &Program) -> Result<(), SyntaxError> {
        let module = Arc::new(script::parse_source(&program.source)?);
        for entry in self.attachments.values_mut() {
            if entry.attachment.program_id == program.id {
                entry.program = Arc::clone(&module);
            }
        }
        self.programs.insert(program.id.clone(), module);
        Ok(())
    }

    pub fn has_program(&self, program_id: &str) -> bool {
        self.programs.contains_key(program_id)
    }

    /// Forgets a program and detaches everything running it.
    pub fn unload_program(&mut self, program_id: &str, now: u64) -> Vec<TriggerEvent> {
        self.programs.remove(program_id);
        self.detach_where(now, |a| a.program_id == program_id)
    }

    pub fn attach(
        &mut self,
        id: String,
        spec: &AttachSpec,
        states: &dyn StateLookup,
        now: u64,
    ) -> Result<(Attachment, TriggerEvent), EngineError> {
        let program = self
            .programs
            .get(&spec.program_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownProgram(spec.program_id.clone()))?;
        if states.state(&spec.anchor_state_id).is_none() {
            return Err(EngineError::UnknownState(spec.anchor_state_id.clone()));
        }
        spec.validate()?;
        if self.attachments.contains_key(&id) {
            return Err(EngineError::DuplicateAttachment(id));
        }
        let attachment = Attachment {
            id: id.clone(),
            program_id: spec.program_id.clone(),
            anchor_state_id: spec.anchor_state_id.clone(),
            name: spec.name.clone(),
            lifespan_min: spec.lifespan_min,
            max_executions: spec.max_executions,
            created_at: now,
            executions_used: 0,
            armed: true,
        };
        self.attachments.insert(
            id.clone(),
            Entry {
                attachment: attachment.clone(),
                program,
            },
        );
        let event = TriggerEvent {
            attachment_id: id,
            t_ms: now,
            kind: TriggerEventKind::Attached {
                attachment: attachment.clone(),
            },
        };
        Ok((attachment, event))
    }

    /// Reinstates a persisted attachment without emitting events.
    pub fn restore(&mut self, attachment: Attachment) -> Result<(), EngineError> {
        let program = self
            .programs
            .get(&attachment.program_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownProgram(attachment.program_id.clone()))?;
        self.attachments
            .insert(attachment.id.clone(), Entry { attachment, program });
        Ok(())
    }

    pub fn detach(&mut self, attachment_id: &str, now: u64) -> Result<TriggerEvent, EngineError> {
        self.attachments
            .remove(attachment_id)
            .map(|_| TriggerEvent {
                attachment_id: attachment_id.to_string(),
                t_ms: now,
                kind: TriggerEventKind::Detached,
            })
            .ok_or_else(|| EngineError::UnknownAttachment(attachment_id.to_string()))
    }

    /// Detaches every attachment anchored to `state_id`.
    pub fn detach_anchored(&mut self, state_id: &str, now: u64) -> Vec<TriggerEvent> {
        self.detach_where(now, |a| a.anchor_state_id == state_id)
    }

    fn detach_where(&mut self, now: u64, pred: impl Fn(&Attachment) -> bool) -> Vec<TriggerEvent> {
        let ids: Vec<String> = self
            .attachments
            .values()
            .filter(|e| pred(&e.attachment))
            .map(|e| e.attachment.id.clone())
            .collect();
        ids.iter()
            .filter_map(|id| self.detach(id, now).ok())
            .collect()
    }

    pub fn get(&self, attachment_id: &str) -> Option<&Attachment> {
        self.attachments.get(attachment_id).map(|e| &e.attachment)
    }

    pub fn attachments(&self) -> impl Iterator<Item = &Attachment> {
        self.attachments.values().map(|e| &e.attachment)
    }

    pub fn list_active(&self, now: u64) -> Vec<ActiveAttachment> {
        self.attachments
            .values()
            .map(|e| &e.attachment)
            .filter(|a| now < a.expires_at())
            .map(|a| ActiveAttachment {
                attachment: a.clone(),
                expires_at: a.expires_at(),
                remaining_ms: a.expires_at() - now,
                remaining_executions: a.remaining_executions(),
            })
            .collect()
    }

    /// Advances every attachment by one frame.
    pub fn step(&mut self, frame: &Frame, states: &dyn StateLookup) -> Vec<TriggerEvent> {
        let t = frame.t_ms;
        let mut events = Vec::new();

        let expired: Vec<String> = self
            .attachments
            .values()
            .filter(|e| t >= e.attachment.expires_at())
            .map(|e| e.attachment.id.clone())
            .collect();
        for id in expired {
            self.attachments.remove(&id);
            events.push(TriggerEvent {
                attachment_id: id,
                t_ms: t,
                kind: TriggerEventKind::Expired,
            });
        }

        let mut finished = Vec::new();
        for entry in self.attachments.values_mut() {
            let a = &mut entry.attachment;
            let visible = states
                .state(&a.anchor_state_id)
                .is_some_and(|anchor| resolve(frame, anchor).is_some());
            if !visible {
                continue;
            }
            let ctx = EvalContext::new(frame, states)
                .dry_run(!a.armed)
                .step_budget(self.step_budget);
            let outcome = script::evaluate(&entry.program, &ctx);
            if let Some(error) = outcome.error {
                events.push(TriggerEvent {
                    attachment_id: a.id.clone(),
                    t_ms: t,
                    kind: TriggerEventKind::EvalError { error },
                });
                continue;
            }
            if !outcome.fired {
                a.armed = true;
                continue;
            }
            if !a.armed {
                continue;
            }
            a.executions_used += 1;
            a.armed = false;
            events.push(TriggerEvent {
                attachment_id: a.id.clone(),
                t_ms: t,
                kind: TriggerEventKind::Triggered {
                    record: ExecutionRecord {
                        attachment_id: a.id.clone(),
                        frame_id: frame.frame_id,
                        t_ms: t,
                        actions: outcome.actions,
                        console: outcome.console,
                    },
                },
            });
            if a.executions_used >= a.max_executions {
                finished.push(a.id.clone());
                events.push(TriggerEvent {
                    attachment_id: a.id.clone(),
                    t_ms: t,
                    kind: TriggerEventKind::Exhausted,
                });
            }
        }
        for id in finished {
            self.attachments.remove(&id);
        }
        events
    }
}
