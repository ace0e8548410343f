//! Recursive-descent parser for the snippet grammar.

use super::ast::*;
use super::error::ParseError;
use super::lexer::{Token, TokenKind, TokenValue, RESERVED};
use super::Span;

pub fn parse(tokens: &[Token]) -> Result<Module, ParseError> {
    Parser { toks: tokens, i: 0 }.module()
}

struct Parser<'t> {
    toks: &'t [Token],
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

fn describe(t: Option<&Token>) -> String {
    match t {
        None => "end of input".into(),
        Some(t) => match t.kind {
            TokenKind::Newline => "newline".into(),
            TokenKind::Indent => "indent".into(),
            TokenKind::Dedent => "dedent".into(),
            _ => format!("'{}'", t.lexeme),
        },
    }
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.i)
    }

    fn peek_is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, lexeme))
    }

    fn advance(&mut self) -> &'t Token {
        let t = &self.toks[self.i];
        self.i += 1;
        t
    }

    fn here(&self) -> (usize, usize, usize) {
        match self.peek() {
            Some(t) => (t.span.start, t.line, t.col),
            None => match self.toks.last() {
                Some(t) => (t.span.end, t.line, t.col + t.lexeme.chars().count()),
                None => (0, 1, 1),
            },
        }
    }

    fn prev_end(&self) -> usize {
        if self.i == 0 {
            0
        } else {
            self.toks[self.i - 1].span.end
        }
    }

    fn pos_from(&self, start: (usize, usize, usize)) -> Pos {
        Pos {
            span: Span::new(start.0, self.prev_end().max(start.0)),
            line: start.1,
            col: start.2,
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let (_, line, col) = self.here();
        ParseError {
            expected: expected.into(),
            found: describe(self.peek()),
            line,
            col,
        }
    }

    fn expect(&mut self, kind: TokenKind, lexeme: &str, what: &str) -> PResult<&'t Token> {
        if self.peek_is(kind, lexeme) {
            Ok(self.advance())
        } else {
            Err(self.error(what))
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, what: &str) -> PResult<&'t Token> {
        if self.peek().is_some_and(|t| t.kind == kind) {
            Ok(self.advance())
        } else {
            Err(self.error(what))
        }
    }

    fn module(mut self) -> PResult<Module> {
        let start = self.here();
        let mut body = Vec::new();
        while self.peek().is_some() {
            body.push(self.stmt()?);
        }
        let mut pos = self.pos_from(start);
        if body.is_empty() {
            pos = Pos { span: Span::new(0, 0), line: 1, col: 1 };
        }
        Ok(Module { body, pos })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let t = self.peek().expect("stmt called at end of input");
        if t.is(TokenKind::Keyword, "if") {
            return self.if_stmt();
        }
        if t.kind == TokenKind::Keyword && RESERVED.contains(&t.lexeme.as_str()) {
            return Err(self.error(format!("statement ('{}' is not supported)", t.lexeme)));
        }
        if matches!(t.kind, TokenKind::Indent) {
            return Err(self.error("statement (unexpected indent)"));
        }
        let start = self.here();
        let kind = if t.kind == TokenKind::Identifier
            && self.toks.get(self.i + 1).is_some_and(|n| n.is(TokenKind::Operator, "="))
        {
            let name = self.advance().lexeme.clone();
            self.advance();
            let value = self.expr()?;
            StmtKind::Assign { name, value }
        } else {
            StmtKind::Expr(self.expr()?)
        };
        let pos = self.pos_from(start);
        self.expect_kind(TokenKind::Newline, "newline")?;
        Ok(Stmt { kind, pos })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.here();
        self.advance();
        let then = self.branch()?;
        let mut elifs = Vec::new();
        while self.peek_is(TokenKind::Keyword, "elif") {
            self.advance();
            elifs.push(self.branch()?);
        }
        let orelse = if self.peek_is(TokenKind::Keyword, "else") {
            self.advance();
            self.expect(TokenKind::Punct, ":", "':'")?;
            Some(self.block()?)
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If { then, elifs, orelse },
            pos: self.pos_from(start),
        })
    }

    fn branch(&mut self) -> PResult<Branch> {
        let cond = self.expr()?;
        self.expect(TokenKind::Punct, ":", "':'")?;
        let body = self.block()?;
        Ok(Branch { cond, body })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_kind(TokenKind::Newline, "newline")?;
        self.expect_kind(TokenKind::Indent, "indented block")?;
        let mut body = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Dedent => {
                    self.advance();
                    break;
                }
                Some(_) => body.push(self.stmt()?),
                None => break,
            }
        }
        Ok(body)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn binary_chain(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let start = self.here();
        let mut lhs = next(self)?;
        while let Some(t) = self.peek() {
            if !matches!(t.kind, TokenKind::Keyword | TokenKind::Operator) || !ops.contains(&t.lexeme.as_str()) {
                break;
            }
            let op = BinaryOp::from_symbol(&self.advance().lexeme).expect("listed operator");
            let rhs = next(self)?;
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos: self.pos_from(start),
            };
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        self.binary_chain(&["or"], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        self.binary_chain(&["and"], Self::not_expr)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.peek_is(TokenKind::Keyword, "not") {
            let start = self.here();
            self.advance();
            let operand = self.not_expr()?;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                pos: self.pos_from(start),
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let start = self.here();
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match BinaryOp::from_symbol(&t.lexeme) {
                Some(op) if op.is_comparison() => op,
                _ => return Ok(lhs),
            },
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        Ok(Expr {
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            pos: self.pos_from(start),
        })
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        self.binary_chain(&["+", "-"], Self::mul_expr)
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        self.binary_chain(&["*", "/"], Self::unary_expr)
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.peek_is(TokenKind::Operator, "-") {
            let start = self.here();
            self.advance();
            let operand = self.unary_expr()?;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Neg,
                    operand: Box::new(operand),
                },
                pos: self.pos_from(start),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.here();
        let Some(t) = self.peek() else {
            return Err(self.error("expression"));
        };
        let kind = match (t.kind, t.lexeme.as_str()) {
            (TokenKind::Number, _) => match t.value {
                TokenValue::Number(n) => {
                    self.advance();
                    ExprKind::Literal(Literal::Number(n))
                }
                _ => unreachable!("number token without value"),
            },
            (TokenKind::String, _) => {
                self.advance();
                ExprKind::Literal(Literal::Str(t.text().unwrap_or_default().to_string()))
            }
            (TokenKind::StateRef, _) => {
                self.advance();
                ExprKind::StateRef(t.text().unwrap_or_default().to_string())
            }
            (TokenKind::Keyword, "True") => {
                self.advance();
                ExprKind::Literal(Literal::Bool(true))
            }
            (TokenKind::Keyword, "False") => {
                self.advance();
                ExprKind::Literal(Literal::Bool(false))
            }
            (TokenKind::Keyword, "None") => {
                self.advance();
                ExprKind::Literal(Literal::None)
            }
            (TokenKind::Identifier, name) => {
                self.advance();
                if self.peek_is(TokenKind::Punct, "(") {
                    self.advance();
                    let args = self.args()?;
                    ExprKind::Call {
                        callee: name.to_string(),
                        args,
                    }
                } else {
                    ExprKind::Name(name.to_string())
                }
            }
            (TokenKind::Punct, "(") => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::Punct, ")", "')'")?;
                return Ok(inner);
            }
            _ => return Err(self.error("expression")),
        };
        Ok(Expr {
            kind,
            pos: self.pos_from(start),
        })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.peek_is(TokenKind::Punct, ")") {
            self.advance();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.peek_is(TokenKind::Punct, ",") {
                self.advance();
                continue;
            }
            self.expect(TokenKind::Punct, ")", "',' or ')'")?;
            return Ok(args);
        }
    }
}
