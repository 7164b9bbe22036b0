use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{BinaryOp, Expr, ExprKind, Function, Span};
use super::lexer::{tokenize_limited, LexError, Token, TokenKind};

/// Limits applied while parsing a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub max_chars: usize,
    pub max_tokens: usize,
    pub max_depth: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_chars: 512,
            max_tokens: 128,
            max_depth: 64,
        }
    }
}

/// Coarse class of a syntax failure, used for batch statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntaxErrorClass {
    UnbalancedParenthesis,
    FunctionError,
    OtherSyntax,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unbalanced parenthesis at position {pos}")]
    UnbalancedParenthesis { pos: usize },
    #[error("unexpected token '{found}' at position {pos}")]
    UnexpectedToken { found: String, pos: usize },
    #[error("formula ends with a dangling operator or missing operand")]
    UnexpectedEnd,
    #[error("{func} takes {expected} argument(s), found {found} at position {pos}")]
    Arity {
        func: String,
        expected: usize,
        found: usize,
        pos: usize,
    },
    #[error("{func} expects a variable name as argument {arg} at position {pos}")]
    BindingNotIdentifier { func: String, arg: usize, pos: usize },
    #[error("unknown function '{name}' at position {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("formula has {count} tokens, limit is {max}")]
    TooManyTokens { count: usize, max: usize },
    #[error("expression nesting exceeds depth {max}")]
    TooDeep { max: usize },
}

impl ParseError {
    pub fn class(&self) -> SyntaxErrorClass {
        match self {
            ParseError::UnbalancedParenthesis { .. } => SyntaxErrorClass::UnbalancedParenthesis,
            ParseError::Arity { .. }
            | ParseError::BindingNotIdentifier { .. }
            | ParseError::UnknownFunction { .. } => SyntaxErrorClass::FunctionError,
            _ => SyntaxErrorClass::OtherSyntax,
        }
    }
}

/// Tokenize and parse `text` with default limits.
pub fn parse_formula(text: &str) -> Result<Expr, ParseError> {
    parse_formula_with(text, &ParseOptions::default())
}

pub fn parse_formula_with(text: &str, opts: &ParseOptions) -> Result<Expr, ParseError> {
    let tokens = tokenize_limited(text, opts.max_chars)?;
    parse_with(&tokens, opts)
}

/// Parse a token sequence with default limits.
pub fn parse(tokens: &[Token]) -> Result<Expr, ParseError> {
    parse_with(tokens, &ParseOptions::default())
}

pub fn parse_with(tokens: &[Token], opts: &ParseOptions) -> Result<Expr, ParseError> {
    if tokens.len() > opts.max_tokens {
        return Err(ParseError::TooManyTokens {
            count: tokens.len(),
            max: opts.max_tokens,
        });
    }
    check_balance(tokens)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        nesting: 0,
        max_depth: opts.max_depth,
    };
    let expr = parser.expression()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::UnexpectedToken {
            found: tok.kind.to_string(),
            pos: tok.span.start,
        });
    }
    if expr.depth() > opts.max_depth {
        return Err(ParseError::TooDeep {
            max: opts.max_depth,
        });
    }
    Ok(expr)
}

fn check_balance(tokens: &[Token]) -> Result<(), ParseError> {
    let mut open: Vec<usize> = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::LParen => open.push(tok.span.start),
            TokenKind::RParen => {
                if open.pop().is_none() {
                    return Err(ParseError::UnbalancedParenthesis {
                        pos: tok.span.start,
                    });
                }
            }
            _ => {}
        }
    }
    match open.pop() {
        Some(pos) => Err(ParseError::UnbalancedParenthesis { pos }),
        None => Ok(()),
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    nesting: usize,
    max_depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<&'a Token, ParseError> {
        match self.advance() {
            Some(tok) if &tok.kind == kind => Ok(tok),
            Some(tok) => Err(unexpected(tok)),
            None => Err(ParseError::UnexpectedEnd),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > self.max_depth {
            return Err(ParseError::TooDeep {
                max: self.max_depth,
            });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nesting -= 1;
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        self.leave();
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().map(|t| (&t.kind, t.span)) {
            Some((TokenKind::Minus, span)) => {
                self.pos += 1;
                self.enter()?;
                let operand = self.unary()?;
                self.leave();
                let span = span.join(operand.span);
                Ok(Expr::new(ExprKind::Neg(Box::new(operand)), span))
            }
            Some((TokenKind::Plus, _)) => {
                self.pos += 1;
                self.enter()?;
                let operand = self.unary();
                self.leave();
                operand
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(&TokenKind::Caret) {
            self.enter()?;
            let exponent = self.unary()?;
            self.leave();
            let span = base.span.join(exponent.span);
            return Ok(Expr::new(
                ExprKind::Pow {
                    base: Box::new(base),
                    exponent: Box::new(exponent),
                },
                span,
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.advance().ok_or(ParseError::UnexpectedEnd)?;
        match &tok.kind {
            TokenKind::Number(v) => Ok(Expr::new(ExprKind::Constant(*v), tok.span)),
            TokenKind::Ident(name) => Ok(Expr::new(ExprKind::Symbol(name.clone()), tok.span)),
            TokenKind::LParen => {
                let inner = self.expression()?;
                self.expect(&TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Func(name) => self.call(name, tok.span),
            _ => Err(unexpected(tok)),
        }
    }

    fn call(&mut self, name: &str, name_span: Span) -> Result<Expr, ParseError> {
        self.expect(&TokenKind::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                args.push(self.expression()?);
                if self.eat(&TokenKind::Comma) {
                    continue;
                }
                self.expect(&TokenKind::RParen)?;
                break;
            }
        }
        let end = self.tokens[self.pos - 1].span.end;
        let span = Span::new(name_span.start, end);
        let found = args.len();
        let arity = |expected: usize| -> Result<(), ParseError> {
            if found == expected {
                Ok(())
            } else {
                Err(ParseError::Arity {
                    func: name.to_string(),
                    expected,
                    found,
                    pos: name_span.start,
                })
            }
        };
        let binding_name = |arg: &Expr, index: usize| -> Result<String, ParseError> {
            match &arg.kind {
                ExprKind::Symbol(s) if !s.ends_with("(t)") => Ok(s.clone()),
                _ => Err(ParseError::BindingNotIdentifier {
                    func: name.to_string(),
                    arg: index,
                    pos: arg.span.start,
                }),
            }
        };
        let kind = match name {
            "sin" | "cos" => {
                arity(1)?;
                let func = if name == "sin" {
                    Function::Sin
                } else {
                    Function::Cos
                };
                ExprKind::Call {
                    func,
                    arg: Box::new(args.pop().expect("arity checked")),
                }
            }
            "integral" => {
                arity(2)?;
                let var = binding_name(&args[1], 2)?;
                let integrand = args.swap_remove(0);
                ExprKind::Integral {
                    integrand: Box::new(integrand),
                    var,
                }
            }
            "sum" => {
                arity(4)?;
                let index = binding_name(&args[1], 2)?;
                let mut it = args.into_iter();
                let body = it.next().expect("arity checked");
                let _ = it.next();
                let lower = it.next().expect("arity checked");
                let upper = it.next().expect("arity checked");
                ExprKind::Sum {
                    body: Box::new(body),
                    index,
                    lower: Box::new(lower),
                    upper: Box::new(upper),
                }
            }
            other => {
                return Err(ParseError::UnknownFunction {
                    name: other.to_string(),
                    pos: name_span.start,
                })
            }
        };
        Ok(Expr::new(kind, span))
    }
}

fn unexpected(tok: &Token) -> ParseError {
    ParseError::UnexpectedToken {
        found: tok.kind.to_string(),
        pos: tok.span.start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::corpus;

    fn sym(s: &str) -> Expr {
        Expr::symbol(s)
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_formula("a + b * c ^ d - e").unwrap();
        let expected = Expr::binary(
            BinaryOp::Sub,
            Expr::binary(
                BinaryOp::Add,
                sym("a"),
                Expr::mul(
                    sym("b"),
                    Expr::new(
                        ExprKind::Pow {
                            base: Box::new(sym("c")),
                            exponent: Box::new(sym("d")),
                        },
                        Span::default(),
                    ),
                ),
            ),
            sym("e"),
        );
        assert_eq!(e, expected);

        let div = parse_formula("a / b / c").unwrap();
        assert_eq!(
            div,
            Expr::binary(
                BinaryOp::Div,
                Expr::binary(BinaryOp::Div, sym("a"), sym("b")),
                sym("c")
            )
        );
    }

    #[test]
    fn am_root_is_product_with_envelope_on_left() {
        let am = corpus::bundled_entry("AM").unwrap();
        let e = parse_formula(&am.formula).unwrap();
        let ExprKind::Binary {
            op: BinaryOp::Mul,
            lhs,
            rhs,
        } = &e.kind
        else {
            panic!("root is not a product: {e:?}");
        };
        let envelope = parse_formula("A_c * (1 + m * cos(2*pi*f_m*t + phi_m))").unwrap();
        assert_eq!(**lhs, envelope);
        assert!(matches!(
            rhs.kind,
            ExprKind::Call {
                func: Function::Cos,
                ..
            }
        ));
    }

    #[test]
    fn missing_close_paren() {
        assert!(matches!(
            parse_formula("cos(2*pi*f_c*t"),
            Err(ParseError::UnbalancedParenthesis { pos: 3 })
        ));
        assert!(matches!(
            parse_formula("t)"),
            Err(ParseError::UnbalancedParenthesis { pos: 1 })
        ));
    }

    #[test]
    fn m2_contains_data_term() {
        let m2 = corpus::bundled_entry("M2").unwrap();
        let e = parse_formula(&m2.formula).unwrap();
        let term = parse_formula("A * pi * d(t) * sin(2*pi*f_c*t)").unwrap();
        fn contains(hay: &Expr, needle: &Expr) -> bool {
            hay == needle || hay.children().into_iter().any(|c| contains(c, needle))
        }
        assert!(contains(&e, &term));
    }

    #[test]
    fn error_classes() {
        let cases = [
            ("A *", SyntaxErrorClass::OtherSyntax),
            ("* A", SyntaxErrorClass::OtherSyntax),
            ("sin(t, t)", SyntaxErrorClass::FunctionError),
            ("integral(m(t))", SyntaxErrorClass::FunctionError),
            ("sum(m, 2, 1, n)", SyntaxErrorClass::FunctionError),
            ("tan(2*t)", SyntaxErrorClass::FunctionError),
            ("((t)", SyntaxErrorClass::UnbalancedParenthesis),
            ("t,t", SyntaxErrorClass::OtherSyntax),
            ("", SyntaxErrorClass::OtherSyntax),
        ];
        for (text, class) in cases {
            let err = parse_formula(text).unwrap_err();
            assert_eq!(err.class(), class, "{text}: {err}");
        }
    }

    #[test]
    fn integral_and_sum_forms() {
        let e = parse_formula("k_f * integral(m(t), t) + sum(m, i, 1, n)").unwrap();
        let ExprKind::Binary { lhs, rhs, .. } = e.kind else {
            panic!()
        };
        assert!(lhs.contains_integral());
        assert!(matches!(rhs.kind, ExprKind::Sum { ref index, .. } if index == "i"));
    }

    #[test]
    fn depth_limit() {
        let deep = "(".repeat(70) + "t" + &")".repeat(70);
        let opts = ParseOptions {
            max_tokens: 1000,
            ..ParseOptions::default()
        };
        assert!(matches!(
            parse_formula_with(&deep, &opts),
            Err(ParseError::TooDeep { .. })
        ));
        let chain = vec!["t"; 80].join("+");
        assert!(matches!(
            parse_formula_with(&chain, &opts),
            Err(ParseError::TooDeep { .. })
        ));
        let ok = "(".repeat(10) + "t" + &")".repeat(10);
        assert!(parse_formula(&ok).is_ok());
    }

    #[test]
    fn token_limit() {
        let many = vec!["t"; 70].join("*");
        assert!(matches!(
            parse_formula(&many),
            Err(ParseError::TooManyTokens { .. })
        ));
    }
}
