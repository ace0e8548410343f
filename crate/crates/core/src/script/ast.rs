//! Syntax tree. Every node carries the byte span and start position of the
//! source it was parsed from.

use super::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub span: Span,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Module {
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub cond: Expr,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    If {
        then: Branch,
        elifs: Vec<Branch>,
        orelse: Option<Vec<Stmt>>,
    },
    Assign {
        name: String,
        value: Expr,
    },
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "or",
            BinaryOp::And => "and",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "or" => BinaryOp::Or,
            "and" => BinaryOp::And,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            _ => return None,
        })
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Str(String),
    Bool(bool),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Name(String),
    StateRef(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    /// Precedence of the expression's outermost construct.
    pub fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary { op, .. } => op.precedence(),
            ExprKind::Unary { op: UnaryOp::Not, .. } => 3,
            ExprKind::Unary { op: UnaryOp::Neg, .. } => 7,
            _ => 8,
        }
    }
}

impl Module {
    /// Copy with every position cleared, for structural comparison.
    pub fn without_positions(&self) -> Module {
        Module {
            body: self.body.iter().map(Stmt::without_positions).collect(),
            pos: Pos::default(),
        }
    }

    /// Structural equality, ignoring source positions.
    pub fn same_structure(&self, other: &Module) -> bool {
        self.without_positions() == other.without_positions()
    }

    /// Visits every expression in source order.
    pub fn walk_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        fn stmts<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Expr)) {
            for s in body {
                match &s.kind {
                    StmtKind::If { then, elifs, orelse } => {
                        for b in std::iter::once(then).chain(elifs) {
                            b.cond.walk(f);
                            stmts(&b.body, f);
                        }
                        if let Some(body) = orelse {
                            stmts(body, f);
                        }
                    }
                    StmtKind::Assign { value, .. } => value.walk(f),
                    StmtKind::Expr(e) => e.walk(f),
                }
            }
        }
        stmts(&self.body, f)
    }
}

impl Stmt {
    fn without_positions(&self) -> Stmt {
        let strip = |body: &Vec<Stmt>| body.iter().map(Stmt::without_positions).collect();
        let branch = |b: &Branch| Branch {
            cond: b.cond.without_positions(),
            body: strip(&b.body),
        };
        let kind = match &self.kind {
            StmtKind::If { then, elifs, orelse } => StmtKind::If {
                then: branch(then),
                elifs: elifs.iter().map(branch).collect(),
                orelse: orelse.as_ref().map(strip),
            },
            StmtKind::Assign { name, value } => StmtKind::Assign {
                name: name.clone(),
                value: value.without_positions(),
            },
            StmtKind::Expr(e) => StmtKind::Expr(e.without_positions()),
        };
        Stmt {
            kind,
            pos: Pos::default(),
        }
    }
}

impl Expr {
    fn without_positions(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Unary { op, operand } => ExprKind::Unary {
                op: *op,
                operand: Box::new(operand.without_positions()),
            },
            ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
                op: *op,
                lhs: Box::new(lhs.without_positions()),
                rhs: Box::new(rhs.without_positions()),
            },
            ExprKind::Call { callee, args } => ExprKind::Call {
                callee: callee.clone(),
                args: args.iter().map(Expr::without_positions).collect(),
            },
            other => other.clone(),
        };
        Expr {
            kind,
            pos: Pos::default(),
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }
}
