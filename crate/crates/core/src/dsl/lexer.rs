use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::ast::Span;

/// Function keywords recognised by the lexer.
pub const FUNCTION_KEYWORDS: [&str; 4] = ["sin", "cos", "integral", "sum"];

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Number(f64),
    /// Symbol reference; signal symbols keep their `(t)` suffix, e.g. `d(t)`.
    Ident(String),
    /// Identifier written directly against an opening parenthesis.
    Func(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn ends_value(&self) -> bool {
        matches!(
            self,
            TokenKind::Number(_) | TokenKind::Ident(_) | TokenKind::RParen
        )
    }

    fn starts_value(&self) -> bool {
        matches!(
            self,
            TokenKind::Number(_) | TokenKind::Ident(_) | TokenKind::Func(_) | TokenKind::LParen
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(v) => write!(f, "{v}"),
            TokenKind::Ident(s) | TokenKind::Func(s) => f.write_str(s),
            TokenKind::Plus => f.write_str("+"),
            TokenKind::Minus => f.write_str("-"),
            TokenKind::Star => f.write_str("*"),
            TokenKind::Slash => f.write_str("/"),
            TokenKind::Caret => f.write_str("^"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
            TokenKind::Comma => f.write_str(","),
        }
    }
}

/// A token and where it came from. Equality ignores position and whether a
/// multiplication was written or inferred from juxtaposition.
#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    pub implicit: bool,
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LexError {
    #[error("empty formula")]
    Empty,
    #[error("unexpected character '{ch}' at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("malformed number at position {pos}")]
    BadNumber { pos: usize },
    #[error("formula has {len} characters, limit is {max}")]
    TooLong { len: usize, max: usize },
}

/// Split formula text into tokens, inserting `*` between juxtaposed values.
///
/// Positions are character offsets. Accepts the Unicode spellings `π`, `φ`,
/// `·`, `×` and `−` as aliases of `pi`, `phi`, `*`, `*` and `-`.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    tokenize_limited(text, usize::MAX)
}

pub(crate) fn tokenize_limited(text: &str, max_chars: usize) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() > max_chars {
        return Err(LexError::TooLong {
            len: chars.len(),
            max: max_chars,
        });
    }
    if chars.iter().all(|c| c.is_whitespace()) {
        return Err(LexError::Empty);
    }

    let mut raw = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = |kind| Token {
            kind,
            span: Span::new(start, start + 1),
            implicit: false,
        };
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => raw.push(single(TokenKind::Plus)),
            '-' | '\u{2212}' => raw.push(single(TokenKind::Minus)),
            '*' | '\u{00b7}' | '\u{00d7}' => raw.push(single(TokenKind::Star)),
            '/' => raw.push(single(TokenKind::Slash)),
            '^' => raw.push(single(TokenKind::Caret)),
            '(' => raw.push(single(TokenKind::LParen)),
            ')' => raw.push(single(TokenKind::RParen)),
            ',' => raw.push(single(TokenKind::Comma)),
            c if c.is_ascii_digit() || (c == '.' && next_is_digit(&chars, i + 1)) => {
                let (value, end) = lex_number(&chars, i)?;
                raw.push(Token {
                    kind: TokenKind::Number(value),
                    span: Span::new(start, end),
                    implicit: false,
                });
                i = end;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = i + 1;
                while end < chars.len() && (chars[end].is_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                let word: String = chars[i..end].iter().collect();
                let word = match word.as_str() {
                    "\u{03c0}" => "pi".to_string(),
                    "\u{03c6}" | "\u{03d5}" => "phi".to_string(),
                    _ => word,
                };
                let abuts_paren = chars.get(end) == Some(&'(');
                if FUNCTION_KEYWORDS.contains(&word.as_str()) {
                    raw.push(Token {
                        kind: TokenKind::Func(word),
                        span: Span::new(start, end),
                        implicit: false,
                    });
                } else if abuts_paren
                    && chars.get(end + 1) == Some(&'t')
                    && chars.get(end + 2) == Some(&')')
                {
                    end += 3;
                    raw.push(Token {
                        kind: TokenKind::Ident(format!("{word}(t)")),
                        span: Span::new(start, end),
                        implicit: false,
                    });
                } else if abuts_paren {
                    raw.push(Token {
                        kind: TokenKind::Func(word),
                        span: Span::new(start, end),
                        implicit: false,
                    });
                } else {
                    raw.push(Token {
                        kind: TokenKind::Ident(word),
                        span: Span::new(start, end),
                        implicit: false,
                    });
                }
                i = end;
                continue;
            }
            other => return Err(LexError::UnexpectedChar { ch: other, pos: i }),
        }
        i += 1;
    }

    let mut tokens: Vec<Token> = Vec::with_capacity(raw.len() * 2);
    for tok in raw {
        if let Some(prev) = tokens.last() {
            if prev.kind.ends_value() && tok.kind.starts_value() {
                tokens.push(Token {
                    kind: TokenKind::Star,
                    span: Span::point(tok.span.start),
                    implicit: true,
                });
            }
        }
        tokens.push(tok);
    }
    Ok(tokens)
}

fn next_is_digit(chars: &[char], at: usize) -> bool {
    chars.get(at).is_some_and(|c| c.is_ascii_digit())
}

fn lex_number(chars: &[char], start: usize) -> Result<(f64, usize), LexError> {
    let mut end = start;
    while end < chars.len() && chars[end].is_ascii_digit() {
        end += 1;
    }
    if end < chars.len() && chars[end] == '.' {
        end += 1;
        while end < chars.len() && chars[end].is_ascii_digit() {
            end += 1;
        }
    }
    // exponent only when digits follow, so `2 e` stays a product
    if end < chars.len() && (chars[end] == 'e' || chars[end] == 'E') {
        let mut probe = end + 1;
        if probe < chars.len() && (chars[probe] == '+' || chars[probe] == '-') {
            probe += 1;
        }
        if next_is_digit(chars, probe) {
            end = probe;
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
        }
    }
    let text: String = chars[start..end].iter().collect();
    text.parse::<f64>()
        .map(|v| (v, end))
        .map_err(|_| LexError::BadNumber { pos: start })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn explicit_carrier() {
        use TokenKind::*;
        assert_eq!(
            kinds("A_c * cos(2*pi*f_c*t)"),
            vec![
                Ident("A_c".into()),
                Star,
                Func("cos".into()),
                LParen,
                Number(2.0),
                Star,
                Ident("pi".into()),
                Star,
                Ident("f_c".into()),
                Star,
                Ident("t".into()),
                RParen,
            ]
        );
    }

    #[test]
    fn juxtaposition_matches_starred_form() {
        let implicit = tokenize("cos(2 pi f_c t)").unwrap();
        let explicit = tokenize("cos(2*pi*f_c*t)").unwrap();
        assert_eq!(implicit, explicit);
        assert_eq!(implicit.iter().filter(|t| t.implicit).count(), 3);
    }

    #[test]
    fn rejects_foreign_operator() {
        assert_eq!(
            tokenize("A_c ⊕ t"),
            Err(LexError::UnexpectedChar { ch: '⊕', pos: 4 })
        );
    }

    #[test]
    fn signal_symbols_keep_suffix() {
        use TokenKind::*;
        assert_eq!(
            kinds("I(t)*cos(t) Q(t)"),
            vec![
                Ident("I(t)".into()),
                Star,
                Func("cos".into()),
                LParen,
                Ident("t".into()),
                RParen,
                Star,
                Ident("Q(t)".into()),
            ]
        );
        // a space breaks the signal form into a product
        assert_eq!(
            kinds("A (t)"),
            vec![Ident("A".into()), Star, LParen, Ident("t".into()), RParen]
        );
    }

    #[test]
    fn numbers_and_exponents() {
        use TokenKind::*;
        assert_eq!(kinds("1.5e3"), vec![Number(1500.0)]);
        assert_eq!(kinds(".25"), vec![Number(0.25)]);
        assert_eq!(kinds("2 e"), vec![Number(2.0), Star, Ident("e".into())]);
    }

    #[test]
    fn unicode_aliases() {
        assert_eq!(tokenize("2·π·φ").unwrap(), tokenize("2*pi*phi").unwrap());
    }

    #[test]
    fn empty_and_long_inputs() {
        assert_eq!(tokenize("   "), Err(LexError::Empty));
        let long = "t+".repeat(300) + "t";
        assert!(matches!(
            tokenize_limited(&long, 512),
            Err(LexError::TooLong { .. })
        ));
    }
}
