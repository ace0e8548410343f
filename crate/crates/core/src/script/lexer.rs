//! Indentation-aware tokenizer.

use std::fmt;

use super::error::LexError;
use super::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    StateRef,
    Operator,
    Punct,
    Newline,
    Indent,
    Dedent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenValue {
    None,
    Number(f64),
    /// Decoded string literal, or the id of a state reference.
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source text. Synthetic tokens (final newline, dedent) are empty.
    pub lexeme: String,
    pub value: TokenValue,
    pub line: usize,
    pub col: usize,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn text(&self) -> Option<&str> {
        match &self.value {
            TokenValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Identifier => "identifier",
            TokenKind::Keyword => "keyword",
            TokenKind::Number => "number",
            TokenKind::String => "string",
            TokenKind::StateRef => "state reference",
            TokenKind::Operator => "operator",
            TokenKind::Punct => "punctuation",
            TokenKind::Newline => "newline",
            TokenKind::Indent => "indent",
            TokenKind::Dedent => "dedent",
        };
        f.write_str(s)
    }
}

pub const KEYWORDS: &[&str] = &["if", "elif", "else", "and", "or", "not", "True", "False", "None"];

/// Python keywords that are recognized only to give a clear error.
pub const RESERVED: &[&str] = &[
    "for", "while", "def", "class", "import", "from", "return", "lambda", "in", "is", "pass",
    "break", "continue", "global", "nonlocal", "with", "try", "except", "finally", "raise",
    "yield", "async", "await", "del", "assert",
];

const STATE_PREFIX: &str = "@state(";

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    depth: usize,
    indents: Vec<usize>,
    at_line_start: bool,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            line: 1,
            col: 1,
            depth: 0,
            indents: vec![0],
            at_line_start: true,
            out: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> LexError {
        LexError {
            message: message.into(),
            line,
            col,
        }
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: usize, col: usize, value: TokenValue) {
        self.out.push(Token {
            kind,
            lexeme: self.src[start..self.pos].to_string(),
            value,
            line,
            col,
            span: Span::new(start, self.pos),
        });
    }

    fn push_synthetic(&mut self, kind: TokenKind) {
        self.out.push(Token {
            kind,
            lexeme: String::new(),
            value: TokenValue::None,
            line: self.line,
            col: self.col,
            span: Span::new(self.pos, self.pos),
        });
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        loop {
            if self.at_line_start && self.depth == 0 {
                if !self.layout()? {
                    break;
                }
                continue;
            }
            let Some(c) = self.peek() else { break };
            let (start, line, col) = (self.pos, self.line, self.col);
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => self.skip_comment(),
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(TokenKind::Newline, start, line, col, TokenValue::None);
                        self.at_line_start = true;
                    }
                }
                '"' | '\'' => {
                    let text = self.string_body()?;
                    self.push(TokenKind::String, start, line, col, TokenValue::Text(text));
                }
                '@' => {
                    let id = self.state_ref()?;
                    self.push(TokenKind::StateRef, start, line, col, TokenValue::Text(id));
                }
                c if c.is_ascii_digit() => self.number(start, line, col)?,
                c if c == '_' || c.is_alphabetic() => {
                    while matches!(self.peek(), Some(c) if c == '_' || c.is_alphanumeric()) {
                        self.bump();
                    }
                    let word = &self.src[start..self.pos];
                    let kind = if KEYWORDS.contains(&word) || RESERVED.contains(&word) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Identifier
                    };
                    self.push(kind, start, line, col, TokenValue::None);
                }
                '(' | ')' | ',' | ':' => {
                    self.bump();
                    if c == '(' {
                        self.depth += 1;
                    } else if c == ')' {
                        self.depth = self.depth.saturating_sub(1);
                    }
                    self.push(TokenKind::Punct, start, line, col, TokenValue::None);
                }
                '=' | '!' | '<' | '>' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                    } else if c == '!' {
                        return Err(self.err(line, col, "unexpected character '!'"));
                    }
                    self.push(TokenKind::Operator, start, line, col, TokenValue::None);
                }
                '+' | '-' | '*' | '/' => {
                    self.bump();
                    self.push(TokenKind::Operator, start, line, col, TokenValue::None);
                }
                other => {
                    return Err(self.err(line, col, format!("unexpected character {other:?}")));
                }
            }
        }
        if self.depth > 0 {
            return Err(self.err(self.line, self.col, "unexpected end of input inside parentheses"));
        }
        if !matches!(
            self.out.last().map(|t| t.kind),
            None | Some(TokenKind::Newline) | Some(TokenKind::Dedent)
        ) {
            self.push_synthetic(TokenKind::Newline);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push_synthetic(TokenKind::Dedent);
        }
        Ok(self.out)
    }

    /// Handles indentation at the start of a logical line. Returns false at
    /// end of input.
    fn layout(&mut self) -> Result<bool, LexError> {
        let (start, line) = (self.pos, self.line);
        let mut width = 0;
        while let Some(c) = self.peek() {
            match c {
                ' ' => width += 1,
                '\t' => return Err(self.err(line, self.col, "tab in indentation")),
                _ => break,
            }
            self.bump();
        }
        match self.peek() {
            None => return Ok(false),
            Some('\n') => {
                self.bump();
                return Ok(true);
            }
            Some('\r') if self.peek_at(1) == Some('\n') => {
                self.bump();
                self.bump();
                return Ok(true);
            }
            Some('#') => {
                self.skip_comment();
                if self.peek() == Some('\n') {
                    self.bump();
                }
                return Ok(true);
            }
            _ => {}
        }
        self.at_line_start = false;
        let current = *self.indents.last().expect("indent stack never empty");
        if width > current {
            self.indents.push(width);
            self.push(TokenKind::Indent, start, line, 1, TokenValue::None);
        } else if width < current {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push_synthetic(TokenKind::Dedent);
            }
            if *self.indents.last().unwrap() != width {
                return Err(self.err(line, 1, "inconsistent indentation"));
            }
        }
        Ok(true)
    }

    fn skip_comment(&mut self) {
        while !matches!(self.peek(), None | Some('\n')) {
            self.bump();
        }
    }

    fn number(&mut self, start: usize, line: usize, col: usize) -> Result<(), LexError> {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') {
            if !matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
                return Err(self.err(self.line, self.col, "expected digit after decimal point"));
            }
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(c) if c == '_' || c.is_alphabetic()) {
            return Err(self.err(self.line, self.col, "invalid character in number"));
        }
        let value: f64 = self.src[start..self.pos]
            .parse()
            .map_err(|_| self.err(line, col, "invalid number"))?;
        if !value.is_finite() {
            return Err(self.err(line, col, "number out of range"));
        }
        self.push(TokenKind::Number, start, line, col, TokenValue::Number(value));
        Ok(())
    }

    /// Consumes a quoted literal and returns its decoded contents.
    fn string_body(&mut self) -> Result<String, LexError> {
        let (line, col) = (self.line, self.col);
        let quote = self.bump().expect("caller saw a quote");
        let mut text = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.err(line, col, "unterminated string")),
                Some(c) if c == quote => return Ok(text),
                Some('\\') => {
                    let (el, ec) = (self.line, self.col - 1);
                    let decoded = match self.bump() {
                        Some('\\') => '\\',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        None | Some('\n') => return Err(self.err(line, col, "unterminated string")),
                        Some(other) => {
                            return Err(self.err(el, ec, format!("bad escape sequence '\\{other}'")))
                        }
                    };
                    text.push(decoded);
                }
                Some(c) => text.push(c),
            }
        }
    }

    fn state_ref(&mut self) -> Result<String, LexError> {
        let (line, col) = (self.line, self.col);
        let malformed = |lx: &Self| {
            lx.err(line, col, "malformed state descriptor, expected @state(\"<id>\")")
        };
        if !self.src[self.pos..].starts_with(STATE_PREFIX) {
            return Err(malformed(self));
        }
        for _ in 0..STATE_PREFIX.len() {
            self.bump();
        }
        if !matches!(self.peek(), Some('"' | '\'')) {
            return Err(malformed(self));
        }
        let id = self.string_body()?;
        if self.peek() != Some(')') || id.is_empty() {
            return Err(malformed(self));
        }
        self.bump();
        Ok(id)
    }
}
