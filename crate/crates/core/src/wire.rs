//! Wire form of events streamed to clients and written to replay logs.
//!
//! Every message is one JSON object with a `type` tag and a `t_ms` scene time.

use serde::{Deserialize, Serialize};

use crate::detector::match_state;
use crate::engine::{TriggerEvent, TriggerEventKind};
use crate::model::{Attachment, BoundingBox, ExecutionRecord, Frame, ObjectState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Attached,
    Detached,
    Created,
    Deleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsoleLevel {
    Info,
    Error,
}

/// A detection plus the ids of the registry states it currently matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayDetection {
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub bbox: BoundingBox<f64>,
    pub confidence: f64,
    pub matches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventMsg {
    FrameOverlay {
        t_ms: u64,
        frame_id: u64,
        width: u32,
        height: u32,
        detections: Vec<OverlayDetection>,
    },
    Triggered {
        t_ms: u64,
        attachment_id: String,
        record: ExecutionRecord,
    },
    Expired {
        t_ms: u64,
        attachment_id: String,
    },
    Exhausted {
        t_ms: u64,
        attachment_id: String,
    },
    Console {
        t_ms: u64,
        level: ConsoleLevel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attachment_id: Option<String>,
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        line: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        col: Option<usize>,
    },
    AttachmentChanged {
        t_ms: u64,
        change: Change,
        attachment_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attachment: Option<Attachment>,
    },
    StateChanged {
        t_ms: u64,
        change: Change,
        state_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<ObjectState>,
    },
}

impl EventMsg {
    pub fn t_ms(&self) -> u64 {
        match self {
            EventMsg::FrameOverlay { t_ms, .. }
            | EventMsg::Triggered { t_ms, .. }
            | EventMsg::Expired { t_ms, .. }
            | EventMsg::Exhausted { t_ms, .. }
            | EventMsg::Console { t_ms, .. }
            | EventMsg::AttachmentChanged { t_ms, .. }
            | EventMsg::StateChanged { t_ms, .. } => *t_ms,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            EventMsg::FrameOverlay { .. } => "frame_overlay",
            EventMsg::Triggered { .. } => "triggered",
            EventMsg::Expired { .. } => "expired",
            EventMsg::Exhausted { .. } => "exhausted",
            EventMsg::Console { .. } => "console",
            EventMsg::AttachmentChanged { .. } => "attachment_changed",
            EventMsg::StateChanged { .. } => "state_changed",
        }
    }

    /// Events produced by the attachment lifecycle, as opposed to overlays
    /// and registry changes.
    pub fn is_lifecycle(&self) -> bool {
        matches!(
            self,
            EventMsg::Triggered { .. }
                | EventMsg::Expired { .. }
                | EventMsg::Exhausted { .. }
                | EventMsg::Console { .. }
                | EventMsg::AttachmentChanged { .. }
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }

    pub fn overlay(frame: &Frame, states: &[ObjectState]) -> Self {
        EventMsg::FrameOverlay {
            t_ms: frame.t_ms,
            frame_id: frame.frame_id,
            width: frame.width,
            height: frame.height,
            detections: frame
                .detections
                .iter()
                .map(|d| OverlayDetection {
                    category: d.category.clone(),
                    instance: d.instance.clone(),
                    bbox: d.bbox,
                    confidence: d.confidence,
                    matches: states
                        .iter()
                        .filter(|s| match_state(d, s))
                        .map(|s| s.id.clone())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn state_created(state: &ObjectState, t_ms: u64) -> Self {
        EventMsg::StateChanged {
            t_ms,
            change: Change::Created,
            state_id: state.id.clone(),
            state: Some(state.clone()),
        }
    }

    pub fn state_deleted(id: &str, t_ms: u64) -> Self {
        EventMsg::StateChanged {
            t_ms,
            change: Change::Deleted,
            state_id: id.to_string(),
            state: None,
        }
    }
}

impl From<TriggerEvent> for EventMsg {
    fn from(ev: TriggerEvent) -> Self {
        let TriggerEvent {
            attachment_id,
            t_ms,
            kind,
        } = ev;
        match kind {
            TriggerEventKind::Attached { attachment } => EventMsg::AttachmentChanged {
                t_ms,
                change: Change::Attached,
                attachment_id,
                attachment: Some(attachment),
            },
            TriggerEventKind::Detached => EventMsg::AttachmentChanged {
                t_ms,
                change: Change::Detached,
                attachment_id,
                attachment: None,
            },
            TriggerEventKind::Triggered { record } => EventMsg::Triggered {
                t_ms,
                attachment_id,
                record,
            },
            TriggerEventKind::Expired => EventMsg::Expired { t_ms, attachment_id },
            TriggerEventKind::Exhausted => EventMsg::Exhausted { t_ms, attachment_id },
            TriggerEventKind::EvalError { error } => EventMsg::Console {
                t_ms,
                level: ConsoleLevel::Error,
                attachment_id: Some(attachment_id),
                text: error.message,
                line: Some(error.line),
                col: Some(error.col),
            },
        }
    }
}

/// Renders events as JSONL, one message per line.
pub fn to_jsonl<'a>(events: impl IntoIterator<Item = &'a EventMsg>) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json());
        out.push('\n');
    }
    out
}
