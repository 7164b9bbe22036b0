//! Modulation formula language: lexing, parsing, validation and evaluation.
//!
//! Formulas use an ASCII grammar with explicit or juxtaposed multiplication,
//! `integral(body, t)` for a running integral from zero, and
//! `sum(body, i, lower, upper)` for finite sums. Signal-valued symbols are
//! written with a `(t)` suffix, e.g. `I(t)`.

pub mod ast;
pub mod corpus;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod symbols;
pub mod validate;

pub use ast::{BinaryOp, Expr, ExprKind, Function, Span};
pub use corpus::{
    bundled_entry, bundled_generated, bundled_generated_csv, bundled_tables, bundled_tables_csv, read_corpus,
    read_corpus_from, write_corpus, CorpusEntry, CorpusError,
};
pub use eval::{
    evaluate, evaluate_segment, Binding, DivisionGuard, EvalError, EvalOptions, Evaluation,
    EvaluationContext, IntegralState, TimeGrid,
};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, parse_formula, parse_formula_with, ParseError, ParseOptions, SyntaxErrorClass};
pub use print::pretty;
pub use symbols::{SymbolInfo, SymbolRole, SymbolTable, Valuation};
pub use validate::{validate, validate_text, FormulaClass, SemanticFlag, ValidationPolicy, ValidationReport};

/// Number of arithmetic and function nodes in `expr`.
pub fn op_count(expr: &Expr) -> usize {
    expr.op_count()
}
