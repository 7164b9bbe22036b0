use std::fmt;

use serde::{Deserialize, Serialize};

/// Half-open character range `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn point(at: usize) -> Self {
        Self { start: at, end: at }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Single-argument elementary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sin,
    Cos,
}

impl Function {
    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Constant(f64),
    Symbol(String),
    Neg(Box<Expr>),
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Pow {
        base: Box<Expr>,
        exponent: Box<Expr>,
    },
    Call {
        func: Function,
        arg: Box<Expr>,
    },
    /// Running integral of `integrand` from 0 to the current value of `var`.
    Integral {
        integrand: Box<Expr>,
        var: String,
    },
    /// `sum(body, index, lower, upper)` with inclusive integer bounds.
    Sum {
        body: Box<Expr>,
        index: String,
        lower: Box<Expr>,
        upper: Box<Expr>,
    },
}

/// Formula syntax tree. Equality ignores source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(ExprKind::Constant(value), Span::default())
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        Self::new(ExprKind::Symbol(name.into()), Span::default())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        let span = lhs.span.join(rhs.span);
        Self::new(
            ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        )
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Self {
        Self::binary(BinaryOp::Mul, lhs, rhs)
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Constant(_) | ExprKind::Symbol(_) => Vec::new(),
            ExprKind::Neg(e) => vec![e],
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Pow { base, exponent } => vec![base, exponent],
            ExprKind::Call { arg, .. } => vec![arg],
            ExprKind::Integral { integrand, .. } => vec![integrand],
            ExprKind::Sum {
                body, lower, upper, ..
            } => vec![body, lower, upper],
        }
    }

    /// Height of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Expr::depth)
            .max()
            .unwrap_or(0)
    }

    /// Number of arithmetic and function-evaluation nodes.
    ///
    /// Every node except constants and symbols counts once. Sums and
    /// integrals count as one evaluation each; their bodies are not
    /// expanded.
    pub fn op_count(&self) -> usize {
        let own = match self.kind {
            ExprKind::Constant(_) | ExprKind::Symbol(_) => 0,
            _ => 1,
        };
        own + self.children().into_iter().map(Expr::op_count).sum::<usize>()
    }

    /// Whether any symbol node named `name` appears in the tree.
    pub fn mentions(&self, name: &str) -> bool {
        match &self.kind {
            ExprKind::Symbol(s) => s == name,
            _ => self.children().into_iter().any(|c| c.mentions(name)),
        }
    }

    pub fn contains_integral(&self) -> bool {
        matches!(self.kind, ExprKind::Integral { .. })
            || self.children().into_iter().any(Expr::contains_integral)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::pretty(self))
    }
}
