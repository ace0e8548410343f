//! Canonical source rendering.
//!
//! Output uses four-space indentation, one space around binary operators,
//! double-quoted strings and `@state("<id>")` descriptors, and only the
//! parentheses precedence requires.

use std::fmt::Write as _;

use super::ast::*;

const INDENT: &str = "    ";

pub fn serialize(module: &Module) -> String {
    let mut out = String::new();
    write_block(&mut out, &module.body, 0);
    out
}

fn write_block(out: &mut String, body: &[Stmt], depth: usize) {
    for stmt in body {
        write_stmt(out, stmt, depth);
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &stmt.kind {
        StmtKind::If { then, elifs, orelse } => {
            let _ = writeln!(out, "{pad}if {}:", expr_to_string(&then.cond));
            write_block(out, &then.body, depth + 1);
            for b in elifs {
                let _ = writeln!(out, "{pad}elif {}:", expr_to_string(&b.cond));
                write_block(out, &b.body, depth + 1);
            }
            if let Some(body) = orelse {
                let _ = writeln!(out, "{pad}else:");
                write_block(out, body, depth + 1);
            }
        }
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{pad}{name} = {}", expr_to_string(value));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{pad}{}", expr_to_string(e));
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Literal(lit) => write_literal(out, lit),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::StateRef(id) => {
            out.push_str("@state(");
            write_string(out, id);
            out.push(')');
        }
        ExprKind::Unary { op, operand } => {
            let (text, min) = match op {
                UnaryOp::Not => ("not ", 3),
                UnaryOp::Neg => ("-", 7),
            };
            out.push_str(text);
            write_operand(out, operand, operand.precedence() < min);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let (lhs_parens, rhs_parens) = if op.is_comparison() {
                (lhs.precedence() <= p, rhs.precedence() <= p)
            } else {
                (lhs.precedence() < p, rhs.precedence() <= p)
            };
            write_operand(out, lhs, lhs_parens);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_operand(out, rhs, rhs_parens);
        }
        ExprKind::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Number(n) => {
            let _ = write!(out, "{n}");
        }
        Literal::Str(s) => write_string(out, s),
        Literal::Bool(true) => out.push_str("True"),
        Literal::Bool(false) => out.push_str("False"),
        Literal::None => out.push_str("None"),
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Renders a state descriptor for `id`.
pub fn state_descriptor(id: &str) -> String {
    let mut out = String::from("@state(");
    write_string(&mut out, id);
    out.push(')');
    out
}
