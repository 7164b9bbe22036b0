use serde::{Deserialize, Serialize};

use super::ast::{BinaryOp, Expr, ExprKind, Span};
use super::parser::{parse_formula_with, ParseOptions, SyntaxErrorClass};
use super::symbols::SymbolTable;

/// Optional semantic checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationPolicy {
    /// Flag formulas that use exactly one of `I(t)` and `Q(t)`.
    pub require_quadrature_pair: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SemanticFlag {
    UndefinedSymbol { name: String, span: Span },
    ZeroLiteralDivisor { span: Span },
    MissingQuadratureComponent { present: String, missing: String },
    ArityError { message: String, span: Span },
}

impl SemanticFlag {
    /// Flags that make a formula impossible to evaluate.
    pub fn is_blocking(&self) -> bool {
        matches!(
            self,
            SemanticFlag::UndefinedSymbol { .. } | SemanticFlag::ArityError { .. }
        )
    }
}

/// Outcome of checking one formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub formula: String,
    pub syntactic_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub syntax_error: Option<SyntaxErrorClass>,
    pub semantic_flags: Vec<SemanticFlag>,
    pub error_messages: Vec<String>,
}

/// Single-label classification of a formula for batch statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaClass {
    Valid,
    UnbalancedParenthesis,
    UndefinedSymbol,
    FunctionError,
    OtherSyntax,
}

impl FormulaClass {
    pub const ALL: [FormulaClass; 5] = [
        FormulaClass::Valid,
        FormulaClass::UnbalancedParenthesis,
        FormulaClass::UndefinedSymbol,
        FormulaClass::FunctionError,
        FormulaClass::OtherSyntax,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FormulaClass::Valid => "valid",
            FormulaClass::UnbalancedParenthesis => "unbalanced-parenthesis",
            FormulaClass::UndefinedSymbol => "undefined-symbol",
            FormulaClass::FunctionError => "function-error",
            FormulaClass::OtherSyntax => "other-syntax",
        }
    }
}

impl ValidationReport {
    /// Parsed and free of blocking semantic flags.
    pub fn is_evaluable(&self) -> bool {
        self.syntactic_ok && !self.semantic_flags.iter().any(SemanticFlag::is_blocking)
    }

    pub fn has_zero_divisor(&self) -> bool {
        self.semantic_flags
            .iter()
            .any(|f| matches!(f, SemanticFlag::ZeroLiteralDivisor { .. }))
    }

    pub fn classify(&self) -> FormulaClass {
        match self.syntax_error {
            Some(SyntaxErrorClass::UnbalancedParenthesis) => FormulaClass::UnbalancedParenthesis,
            Some(SyntaxErrorClass::FunctionError) => FormulaClass::FunctionError,
            Some(SyntaxErrorClass::OtherSyntax) => FormulaClass::OtherSyntax,
            None => {
                if self
                    .semantic_flags
                    .iter()
                    .any(|f| matches!(f, SemanticFlag::UndefinedSymbol { .. }))
                {
                    FormulaClass::UndefinedSymbol
                } else if self
                    .semantic_flags
                    .iter()
                    .any(|f| matches!(f, SemanticFlag::ArityError { .. }))
                {
                    FormulaClass::FunctionError
                } else {
                    FormulaClass::Valid
                }
            }
        }
    }
}

/// Semantic checks on a parsed expression.
pub fn validate(expr: &Expr, table: &SymbolTable, policy: &ValidationPolicy) -> ValidationReport {
    let mut flags = Vec::new();
    let mut scope: Vec<String> = Vec::new();
    walk(expr, table, &mut scope, &mut flags);

    if policy.require_quadrature_pair {
        let has_i = expr.mentions("I(t)");
        let has_q = expr.mentions("Q(t)");
        if has_i != has_q {
            let (present, missing) = if has_i {
                ("I(t)", "Q(t)")
            } else {
                ("Q(t)", "I(t)")
            };
            flags.push(SemanticFlag::MissingQuadratureComponent {
                present: present.into(),
                missing: missing.into(),
            });
        }
    }

    let error_messages = flags.iter().map(describe).collect();
    ValidationReport {
        formula: expr.to_string(),
        syntactic_ok: true,
        syntax_error: None,
        semantic_flags: flags,
        error_messages,
    }
}

/// Parse then validate; syntax errors are folded into the report.
pub fn validate_text(
    text: &str,
    table: &SymbolTable,
    policy: &ValidationPolicy,
    opts: &ParseOptions,
) -> (Option<Expr>, ValidationReport) {
    match parse_formula_with(text, opts) {
        Ok(expr) => {
            let mut report = validate(&expr, table, policy);
            report.formula = text.to_string();
            (Some(expr), report)
        }
        Err(err) => (
            None,
            ValidationReport {
                formula: text.to_string(),
                syntactic_ok: false,
                syntax_error: Some(err.class()),
                semantic_flags: Vec::new(),
                error_messages: vec![err.to_string()],
            },
        ),
    }
}

fn describe(flag: &SemanticFlag) -> String {
    match flag {
        SemanticFlag::UndefinedSymbol { name, span } => {
            format!("undefined symbol '{name}' at position {}", span.start)
        }
        SemanticFlag::ZeroLiteralDivisor { span } => {
            format!("divisor is a literal zero at position {}", span.start)
        }
        SemanticFlag::MissingQuadratureComponent { present, missing } => {
            format!("uses {present} without {missing}")
        }
        SemanticFlag::ArityError { message, .. } => message.clone(),
    }
}

fn walk(expr: &Expr, table: &SymbolTable, scope: &mut Vec<String>, flags: &mut Vec<SemanticFlag>) {
    match &expr.kind {
        ExprKind::Constant(_) => {}
        ExprKind::Symbol(name) => {
            if !scope.iter().any(|s| s == name) && !table.contains(name) {
                flags.push(SemanticFlag::UndefinedSymbol {
                    name: name.clone(),
                    span: expr.span,
                });
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            walk(lhs, table, scope, flags);
            walk(rhs, table, scope, flags);
            if *op == BinaryOp::Div && is_zero_literal_product(rhs) {
                flags.push(SemanticFlag::ZeroLiteralDivisor { span: rhs.span });
            }
        }
        ExprKind::Integral { integrand, var } => {
            if var != "t" {
                flags.push(SemanticFlag::ArityError {
                    message: format!("integral must run over t, found '{var}'"),
                    span: expr.span,
                });
            }
            walk(integrand, table, scope, flags);
        }
        ExprKind::Sum {
            body,
            index,
            lower,
            upper,
        } => {
            walk(lower, table, scope, flags);
            walk(upper, table, scope, flags);
            if index == "t" {
                flags.push(SemanticFlag::ArityError {
                    message: "sum index cannot be the time variable".into(),
                    span: expr.span,
                });
            }
            scope.push(index.clone());
            walk(body, table, scope, flags);
            scope.pop();
        }
        _ => {
            for child in expr.children() {
                walk(child, table, scope, flags);
            }
        }
    }
}

/// A literal `0`, or a product with a literal `0` factor.
fn is_zero_literal_product(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Constant(v) => *v == 0.0,
        ExprKind::Neg(inner) => is_zero_literal_product(inner),
        ExprKind::Binary {
            op: BinaryOp::Mul,
            lhs,
            rhs,
        } => is_zero_literal_product(lhs) || is_zero_literal_product(rhs),
        _ => false,
    }
}
