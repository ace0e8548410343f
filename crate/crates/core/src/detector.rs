//! Detector abstraction and the scene-trace replayer used as the reference
//! detector.
//!
//! A scene trace is JSONL: a header line `{"type":"header","width":W,"height":H}`
//! followed by one `{"type":"frame",...}` line per frame. Unknown keys are
//! ignored; a detection's `instance` defaults to absent and `confidence` to 1.0.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BoundingBox, Detection, Frame, ObjectState};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("reading trace: {0}")]
    Io(#[from] io::Error),
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError::Invalid {
            line,
            message: message.into(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Invalid { line, .. } => Some(*line),
            FormatError::Io(_) => None,
        }
    }
}

/// Source of frames in non-decreasing time order. Once `next_frame` returns
/// `None` it keeps returning `None`.
pub trait Detector {
    fn next_frame(&mut self) -> Option<Frame>;
    fn description(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub frame_id: u64,
    pub t_ms: u64,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneTrace {
    pub width: u32,
    pub height: u32,
    pub frames: Vec<TraceFrame>,
}

impl SceneTrace {
    pub fn frame(&self, index: usize) -> Option<Frame> {
        self.frames.get(index).map(|f| Frame {
            frame_id: f.frame_id,
            t_ms: f.t_ms,
            detections: f.detections.clone(),
            width: self.width,
            height: self.height,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.frames.len()).filter_map(|i| self.frame(i))
    }

    /// Writes the trace back out in its JSONL form.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::json!({"type": "header", "width": self.width, "height": self.height}).to_string();
        out.push('\n');
        for f in &self.frames {
            let mut v = serde_json::to_value(f).expect("trace frame serializes");
            v["type"] = "frame".into();
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header {
        width: u32,
        height: u32,
    },
    Frame {
        frame_id: u64,
        t_ms: u64,
        #[serde(default)]
        detections: Vec<RawDetection>,
    },
}

#[derive(Deserialize)]
struct RawDetection {
    category: String,
    #[serde(default)]
    instance: Option<String>,
    bbox: [f64; 4],
    #[serde(default)]
    confidence: Option<f64>,
}

pub fn load_trace<R: Read>(reader: R) -> Result<SceneTrace, FormatError> {
    let mut header: Option<(u32, u32)> = None;
    let mut frames: Vec<TraceFrame> = Vec::new();
    let mut last_line = 0;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line =
            serde_json::from_str(&line).map_err(|e| FormatError::at(lineno, format!("malformed record: {e}")))?;
        match (parsed, header) {
            (Line::Header { width, height }, None) => {
                if width == 0 || height == 0 {
                    return Err(FormatError::at(lineno, "header width and height must be positive"));
                }
                header = Some((width, height));
            }
            (Line::Header { .. }, Some(_)) => return Err(FormatError::at(lineno, "duplicate header")),
            (Line::Frame { .. }, None) => return Err(FormatError::at(lineno, "missing header")),
            (
                Line::Frame {
                    frame_id,
                    t_ms,
                    detections,
                },
                Some((width, height)),
            ) => {
                if let Some(prev) = frames.last() {
                    if frame_id <= prev.frame_id {
                        return Err(FormatError::at(lineno, "frame_id not strictly increasing"));
                    }
                    if t_ms <= prev.t_ms {
                        return Err(FormatError::at(lineno, "t_ms not strictly increasing"));
                    }
                }
                let detections = detections
                    .into_iter()
                    .enumerate()
                    .map(|(i, raw)| {
                        convert(raw, width, height).map_err(|m| FormatError::at(lineno, format!("detection {i}: {m}")))
                    })
                    .collect::<Result<_, _>>()?;
                frames.push(TraceFrame {
                    frame_id,
                    t_ms,
                    detections,
                });
            }
        }
    }
    let Some((width, height)) = header else {
        return Err(FormatError::at(last_line.max(1), "missing header"));
    };
    Ok(SceneTrace { width, height, frames })
}

fn convert(raw: RawDetection, width: u32, height: u32) -> Result<Detection, String> {
    let [x1, y1, x2, y2] = raw.bbox;
    let bbox = BoundingBox::new(x1, y1, x2, y2).map_err(|e| e.to_string())?;
    if !bbox.fits_within(f64::from(width), f64::from(height)) {
        return Err(format!("bbox {:?} outside {width}x{height}", raw.bbox));
    }
    let d = Detection {
        category: raw.category,
        instance: raw.instance,
        bbox,
        confidence: raw.confidence.unwrap_or(1.0),
    };
    d.validate()?;
    Ok(d)
}

pub fn load_trace_str(text: &str) -> Result<SceneTrace, FormatError> {
    load_trace(text.as_bytes())
}

pub fn load_trace_file(path: impl AsRef<Path>) -> Result<SceneTrace, FormatError> {
    load_trace(File::open(path)?)
}

/// Replays a loaded trace frame by frame.
#[derive(Debug, Clone)]
pub struct TraceReplayer {
    trace: SceneTrace,
    next: usize,
    name: String,
}

impl TraceReplayer {
    pub fn new(trace: SceneTrace) -> Self {
        Self {
            trace,
            next: 0,
            name: "scene trace".into(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl Detector for TraceReplayer {
    fn next_frame(&mut self) -> Option<Frame> {
        let f = self.trace.frame(self.next)?;
        self.next += 1;
        Some(f)
    }

    fn description(&self) -> String {
        format!(
            "{} ({} frames, {}x{})",
            self.name,
            self.trace.frames.len(),
            self.trace.width,
            self.trace.height
        )
    }
}

/// Category equality, plus instance equality when the state pins one.
pub fn match_state(d: &Detection, s: &ObjectState) -> bool {
    d.category == s.category && s.instance.as_ref().is_none_or(|i| d.instance.as_ref() == Some(i))
}

/// Best detection for `s`: highest confidence among matches, earliest in the
/// frame on ties.
pub fn resolve<'f>(frame: &'f Frame, s: &ObjectState) -> Option<&'f Detection> {
    let mut best: Option<&Detection> = None;
    for d in frame.detections.iter().filter(|d| match_state(d, s)) {
        if best.is_none_or(|b| d.confidence > b.confidence) {
            best = Some(d);
        }
    }
    best
}
