//! Tree-walking evaluator.
//!
//! Evaluation is a pure function of the program, the frame and the state
//! registry. Effects are returned as [`Action`] descriptors in the outcome.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::error::RuntimeError;
use crate::detector::resolve;
use crate::model::{Action, Detection, Frame, ObjectState};
use crate::spatial::{self, InParams, OnParams};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000;

/// Read access to object states by id.
pub trait StateLookup {
    fn state(&self, id: &str) -> Option<&ObjectState>;
}

impl StateLookup for BTreeMap<String, ObjectState> {
    fn state(&self, id: &str) -> Option<&ObjectState> {
        self.get(id)
    }
}

impl StateLookup for std::collections::HashMap<String, ObjectState> {
    fn state(&self, id: &str) -> Option<&ObjectState> {
        self.get(id)
    }
}

impl StateLookup for [ObjectState] {
    fn state(&self, id: &str) -> Option<&ObjectState> {
        self.iter().find(|s| s.id == id)
    }
}

impl StateLookup for Vec<ObjectState> {
    fn state(&self, id: &str) -> Option<&ObjectState> {
        self.as_slice().state(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    On,
    In,
    Distance,
    Visible,
    Print,
    Notify,
    Play,
    OpenUrl,
    SendEmail,
}

#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub kind: BuiltinKind,
    pub min_args: usize,
    /// `None` for variadic.
    pub max_args: Option<usize>,
}

impl Builtin {
    pub fn accepts(&self, n: usize) -> bool {
        n >= self.min_args && self.max_args.is_none_or(|m| n <= m)
    }

    pub fn arity_text(&self) -> String {
        match self.max_args {
            None => format!("at least {}", self.min_args),
            Some(m) if m == self.min_args => format!("{m}"),
            Some(m) => format!("{} to {m}", self.min_args),
        }
    }
}

const fn b(name: &'static str, kind: BuiltinKind, min_args: usize, max_args: Option<usize>) -> Builtin {
    Builtin {
        name,
        kind,
        min_args,
        max_args,
    }
}

pub const BUILTINS: &[Builtin] = &[
    b("On", BuiltinKind::On, 2, Some(3)),
    // alias
    b("Upon", BuiltinKind::On, 2, Some(3)),
    b("In", BuiltinKind::In, 2, Some(3)),
    b("Distance", BuiltinKind::Distance, 2, Some(2)),
    b("Visible", BuiltinKind::Visible, 1, Some(1)),
    b("print", BuiltinKind::Print, 0, None),
    b("notify", BuiltinKind::Notify, 2, Some(2)),
    b("play", BuiltinKind::Play, 1, Some(1)),
    b("open_url", BuiltinKind::OpenUrl, 1, Some(1)),
    b("send_email", BuiltinKind::SendEmail, 3, Some(3)),
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Str(String),
    Object(String),
    Null,
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Number(_) => "number",
            Value::Str(_) => "string",
            Value::Object(_) => "object",
            Value::Null => "None",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(s),
            Value::Object(id) => f.write_str(&super::printer::state_descriptor(id)),
            Value::Null => f.write_str("None"),
        }
    }
}

pub struct EvalContext<'a> {
    pub frame: &'a Frame,
    pub states: &'a dyn StateLookup,
    /// Compute `fired` without emitting actions.
    pub dry_run: bool,
    pub step_budget: u64,
}

impl<'a> EvalContext<'a> {
    pub fn new(frame: &'a Frame, states: &'a dyn StateLookup) -> Self {
        Self {
            frame,
            states,
            dry_run: false,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn dry_run(mut self, dry_run: bool) -> Self {
        self.dry_run = dry_run;
        self
    }

    pub fn step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget.max(1);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub fired: bool,
    pub actions: Vec<Action>,
    pub console: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RuntimeError>,
    /// Interpreter steps consumed.
    #[serde(default)]
    pub steps: u64,
}

pub fn evaluate(module: &Module, ctx: &EvalContext<'_>) -> EvalOutcome {
    let mut it = Interpreter {
        ctx,
        env: BTreeMap::new(),
        out: EvalOutcome::default(),
    };
    if let Err(e) = it.block(&module.body) {
        it.out.error = Some(e);
    }
    it.out
}

struct Interpreter<'c, 'a> {
    ctx: &'c EvalContext<'a>,
    env: BTreeMap<String, Value>,
    out: EvalOutcome,
}

type RResult<T> = Result<T, RuntimeError>;

fn err(pos: &Pos, message: impl Into<String>) -> RuntimeError {
    RuntimeError {
        message: message.into(),
        line: pos.line,
        col: pos.col,
    }
}

fn finite(n: f64, pos: &Pos) -> RResult<Value> {
    if n.is_finite() {
        Ok(Value::Number(n))
    } else {
        Err(err(pos, "arithmetic result is not finite"))
    }
}

impl Interpreter<'_, '_> {
    fn tick(&mut self, pos: &Pos) -> RResult<()> {
        if self.out.steps >= self.ctx.step_budget {
            return Err(err(pos, format!("step budget of {} exceeded", self.ctx.step_budget)));
        }
        self.out.steps += 1;
        Ok(())
    }

    fn block(&mut self, body: &[Stmt]) -> RResult<()> {
        for stmt in body {
            self.stmt(stmt)?;
        }
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> RResult<()> {
        self.tick(&stmt.pos)?;
        match &stmt.kind {
            StmtKind::If { then, elifs, orelse } => {
                for branch in std::iter::once(then).chain(elifs) {
                    if self.condition(&branch.cond)? {
                        return self.block(&branch.body);
                    }
                }
                if let Some(body) = orelse {
                    self.block(body)?;
                }
                Ok(())
            }
            StmtKind::Assign { name, value } => {
                let v = self.expr(value)?;
                self.env.insert(name.clone(), v);
                Ok(())
            }
            StmtKind::Expr(e) => self.expr(e).map(drop),
        }
    }

    fn condition(&mut self, e: &Expr) -> RResult<bool> {
        match self.expr(e)? {
            Value::Bool(b) => Ok(b),
            other => Err(err(&e.pos, format!("condition must be bool, got {}", other.type_name()))),
        }
    }

    fn expr(&mut self, e: &Expr) -> RResult<Value> {
        self.tick(&e.pos)?;
        match &e.kind {
            ExprKind::Literal(lit) => Ok(match lit {
                Literal::Number(n) => Value::Number(*n),
                Literal::Str(s) => Value::Str(s.clone()),
                Literal::Bool(b) => Value::Bool(*b),
                Literal::None => Value::Null,
            }),
            ExprKind::Name(name) => self
                .env
                .get(name)
                .cloned()
                .ok_or_else(|| err(&e.pos, format!("unknown name '{name}'"))),
            ExprKind::StateRef(id) => {
                if self.ctx.states.state(id).is_some() {
                    Ok(Value::Object(id.clone()))
                } else {
                    Err(err(&e.pos, format!("unresolved state id \"{id}\"")))
                }
            }
            ExprKind::Unary { op, operand } => {
                let v = self.expr(operand)?;
                match (op, v) {
                    (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (UnaryOp::Neg, Value::Number(n)) => Ok(Value::Number(-n)),
                    (UnaryOp::Not, v) => Err(err(&e.pos, format!("'not' needs bool, got {}", v.type_name()))),
                    (UnaryOp::Neg, v) => Err(err(&e.pos, format!("'-' needs number, got {}", v.type_name()))),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(e, *op, lhs, rhs),
            ExprKind::Call { callee, args } => self.call(e, callee, args),
        }
    }

    fn binary(&mut self, e: &Expr, op: BinaryOp, lhs: &Expr, rhs: &Expr) -> RResult<Value> {
        if matches!(op, BinaryOp::And | BinaryOp::Or) {
            let l = self.logic_operand(op, lhs)?;
            if (op == BinaryOp::And) != l {
                return Ok(Value::Bool(l));
            }
            return self.logic_operand(op, rhs).map(Value::Bool);
        }
        let l = self.expr(lhs)?;
        let r = self.expr(rhs)?;
        let mismatch = |l: &Value, r: &Value| {
            err(
                &e.pos,
                format!("unsupported operand types for '{}': {} and {}", op.symbol(), l.type_name(), r.type_name()),
            )
        };
        match op {
            BinaryOp::Eq => Ok(Value::Bool(l == r)),
            BinaryOp::Ne => Ok(Value::Bool(l != r)),
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                let ord = match (&l, &r) {
                    (Value::Number(a), Value::Number(b)) => a.partial_cmp(b),
                    (Value::Str(a), Value::Str(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
                    _ => return Err(mismatch(&l, &r)),
                };
                let ord = ord.ok_or_else(|| mismatch(&l, &r))?;
                Ok(Value::Bool(match op {
                    BinaryOp::Lt => ord.is_lt(),
                    BinaryOp::Le => ord.is_le(),
                    BinaryOp::Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                }))
            }
            BinaryOp::Add => match (l, r) {
                (Value::Number(a), Value::Number(b)) => finite(a + b, &e.pos),
                (Value::Str(a), Value::Str(b)) => Ok(Value::Str(a + &b)),
                (l, r) => Err(mismatch(&l, &r)),
            },
            BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => match (l, r) {
                (Value::Number(a), Value::Number(b)) => finite(
                    match op {
                        BinaryOp::Sub => a - b,
                        BinaryOp::Mul => a * b,
                        _ => a / b,
                    },
                    &e.pos,
                ),
                (l, r) => Err(mismatch(&l, &r)),
            },
            BinaryOp::And | BinaryOp::Or => unreachable!("handled above"),
        }
    }

    fn logic_operand(&mut self, op: BinaryOp, e: &Expr) -> RResult<bool> {
        match self.expr(e)? {
            Value::Bool(b) => Ok(b),
            v => Err(err(&e.pos, format!("'{}' needs bool operands, got {}", op.symbol(), v.type_name()))),
        }
    }

    fn call(&mut self, e: &Expr, callee: &str, args: &[Expr]) -> RResult<Value> {
        let Some(bi) = builtin(callee) else {
            return Err(err(&e.pos, format!("unknown function '{callee}'")));
        };
        if !bi.accepts(args.len()) {
            return Err(err(
                &e.pos,
                format!("{callee}() takes {} arguments, got {}", bi.arity_text(), args.len()),
            ));
        }
        let mut values = Vec::with_capacity(args.len());
        for a in args {
            values.push(self.expr(a)?);
        }
        let arg_err = |i: usize, want: &str, got: &Value| {
            err(
                &args[i].pos,
                format!("{callee}() argument {} must be {want}, got {}", i + 1, got.type_name()),
            )
        };
        let object = |i: usize| match &values[i] {
            Value::Object(id) => Ok(id.as_str()),
            v => Err(arg_err(i, "an object state", v)),
        };
        let number = |i: usize| match &values[i] {
            Value::Number(n) => Ok(*n),
            v => Err(arg_err(i, "a number", v)),
        };
        let string = |i: usize| match &values[i] {
            Value::Str(s) => Ok(s.clone()),
            v => Err(arg_err(i, "a string", v)),
        };

        let action = match bi.kind {
            BuiltinKind::On => {
                let (a, b) = (object(0)?, object(1)?);
                let params = match values.get(2) {
                    Some(_) => OnParams::new(number(2)?).map_err(|x| err(&args[2].pos, x.to_string()))?,
                    None => OnParams::default(),
                };
                return Ok(Value::Bool(match (self.detect(a), self.detect(b)) {
                    (Some(da), Some(db)) => spatial::relation_on(&da.bbox, &db.bbox, params),
                    _ => false,
                }));
            }
            BuiltinKind::In => {
                let (a, b) = (object(0)?, object(1)?);
                let params = match values.get(2) {
                    Some(_) => InParams::new(number(2)?).map_err(|x| err(&args[2].pos, x.to_string()))?,
                    None => InParams::default(),
                };
                return Ok(Value::Bool(match (self.detect(a), self.detect(b)) {
                    (Some(da), Some(db)) => spatial::relation_in(&da.bbox, &db.bbox, params),
                    _ => false,
                }));
            }
            BuiltinKind::Distance => {
                let (a, b) = (object(0)?, object(1)?);
                let missing = |i: usize, id: &str| err(&args[i].pos, format!("object not visible: {}", super::printer::state_descriptor(id)));
                let da = self.detect(a).ok_or_else(|| missing(0, a))?;
                let db = self.detect(b).ok_or_else(|| missing(1, b))?;
                return Ok(Value::Number(spatial::distance(&da.bbox, &db.bbox)));
            }
            BuiltinKind::Visible => {
                let a = object(0)?;
                return Ok(Value::Bool(self.detect(a).is_some()));
            }
            BuiltinKind::Print => {
                let text = values.iter().map(Value::to_string).collect::<Vec<_>>().join(" ");
                self.out.console.push(text.clone());
                Action::Print { text }
            }
            BuiltinKind::Notify => Action::Notify {
                title: string(0)?,
                message: string(1)?,
            },
            BuiltinKind::Play => Action::Play { media_id: string(0)? },
            BuiltinKind::OpenUrl => Action::OpenUrl { url: string(0)? },
            BuiltinKind::SendEmail => Action::SendEmail {
                to: string(0)?,
                subject: string(1)?,
                body: string(2)?,
            },
        };
        self.out.fired = true;
        if !self.ctx.dry_run {
            self.out.actions.push(action);
        }
        Ok(Value::Null)
    }

    fn detect(&self, state_id: &str) -> Option<&Detection> {
        let state = self.ctx.states.state(state_id)?;
        resolve(self.ctx.frame, state)
    }
}
