//! Static checks run before a script is saved or replayed.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::interp::{builtin, StateLookup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    UnknownFunction,
    Arity,
    UnresolvedState,
    UndefinedName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

/// Checks calls, names and (when `states` is given) state descriptors.
pub fn check(module: &Module, states: Option<&dyn StateLookup>) -> Vec<Diagnostic> {
    let mut c = Checker {
        states,
        assigned: BTreeSet::new(),
        out: Vec::new(),
    };
    c.block(&module.body);
    c.out
}

struct Checker<'a> {
    states: Option<&'a dyn StateLookup>,
    assigned: BTreeSet<String>,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, code: DiagnosticCode, pos: &Pos, message: String) {
        self.out.push(Diagnostic {
            code,
            message,
            line: pos.line,
            col: pos.col,
        });
    }

    fn block(&mut self, body: &[Stmt]) {
        for stmt in body {
            match &stmt.kind {
                StmtKind::If { then, elifs, orelse } => {
                    for b in std::iter::once(then).chain(elifs) {
                        self.expr(&b.cond);
                        self.block(&b.body);
                    }
                    if let Some(body) = orelse {
                        self.block(body);
                    }
                }
                StmtKind::Assign { name, value } => {
                    self.expr(value);
                    self.assigned.insert(name.clone());
                }
                StmtKind::Expr(e) => self.expr(e),
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        let mut found = Vec::new();
        e.walk(&mut |node| found.push(node));
        for node in found {
            match &node.kind {
                ExprKind::Call { callee, args } => match builtin(callee) {
                    None => self.push(
                        DiagnosticCode::UnknownFunction,
                        &node.pos,
                        format!("unknown function '{callee}'"),
                    ),
                    Some(b) if !b.accepts(args.len()) => self.push(
                        DiagnosticCode::Arity,
                        &node.pos,
                        format!("{callee}() takes {} arguments, got {}", b.arity_text(), args.len()),
                    ),
                    Some(_) => {}
                },
                ExprKind::Name(name) if !self.assigned.contains(name) => self.push(
                    DiagnosticCode::UndefinedName,
                    &node.pos,
                    format!("name '{name}' is used before assignment"),
                ),
                ExprKind::StateRef(id) => {
                    if let Some(states) = self.states {
                        if states.state(id).is_none() {
                            self.push(
                                DiagnosticCode::UnresolvedState,
                                &node.pos,
                                format!("unresolved state id \"{id}\""),
                            );
                        }
                    }
                }
                _ => {}
            }
        }
    }
}
