//! The snippet language: a small Python-shaped language with inline object
//! state descriptors (`@state("<id>")`).

pub mod ast;
pub mod check;
mod error;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod segment;

use serde::{Deserialize, Serialize};

pub use ast::Module;
pub use check::{check, Diagnostic, DiagnosticCode};
pub use error::{LexError, ParseError, RuntimeError, SyntaxError};
pub use interp::{evaluate, EvalContext, EvalOutcome, StateLookup, Value, BUILTINS, DEFAULT_STEP_BUDGET};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use printer::{serialize, state_descriptor};
pub use segment::{reassemble, segment_source, Segment, SegmentKind};

/// Half-open byte range into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

/// Tokenizes and parses `source`.
pub fn parse_source(source: &str) -> Result<Module, SyntaxError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

/// `serialize(parse(source))`.
pub fn canonicalize(source: &str) -> Result<String, SyntaxError> {
    parse_source(source).map(|m| serialize(&m))
}
