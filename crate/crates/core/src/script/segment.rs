//! Splits source into plain-text runs and state descriptors, the view the
//! editor uses to swap descriptors for snapshot images and back.

use serde::{Deserialize, Serialize};

use super::error::LexError;
use super::lexer::{tokenize, TokenKind};
use super::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Text,
    StateRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub span: Span,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_id: Option<String>,
}

/// Ordered, gap-free segmentation of `source`. Concatenating the segment
/// texts yields `source` byte for byte. Empty input yields no segments.
pub fn segment_source(source: &str) -> Result<Vec<Segment>, LexError> {
    let tokens = tokenize(source)?;
    let mut out = Vec::new();
    let mut cursor = 0;
    let text = |start: usize, end: usize| Segment {
        kind: SegmentKind::Text,
        span: Span::new(start, end),
        text: source[start..end].to_string(),
        state_id: None,
    };
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::StateRef) {
        if tok.span.start > cursor {
            out.push(text(cursor, tok.span.start));
        }
        out.push(Segment {
            kind: SegmentKind::StateRef,
            span: tok.span,
            text: tok.lexeme.clone(),
            state_id: tok.text().map(str::to_string),
        });
        cursor = tok.span.end;
    }
    if cursor < source.len() {
        out.push(text(cursor, source.len()));
    }
    Ok(out)
}

/// Inverse of [`segment_source`].
pub fn reassemble(segments: &[Segment]) -> String {
    segments.iter().map(|s| s.text.as_str()).collect()
}
