use super::ast::{BinaryOp, Expr, ExprKind};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary {
            op: BinaryOp::Add | BinaryOp::Sub,
            ..
        } => PREC_ADD,
        ExprKind::Binary { .. } => PREC_MUL,
        ExprKind::Neg(_) => PREC_NEG,
        ExprKind::Pow { .. } => PREC_POW,
        _ => PREC_ATOM,
    }
}

/// Render an expression in the ASCII formula grammar with the minimum
/// parentheses needed to reparse to the same tree.
pub fn pretty(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn wrapped(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Constant(v) => out.push_str(&format!("{v}")),
        ExprKind::Symbol(name) => out.push_str(name),
        ExprKind::Neg(inner) => {
            out.push('-');
            wrapped(inner, precedence(inner) < PREC_NEG, out);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = precedence(e);
            wrapped(lhs, precedence(lhs) < p, out);
            out.push(' ');
            out.push(op.symbol());
            out.push(' ');
            wrapped(rhs, precedence(rhs) <= p, out);
        }
        ExprKind::Pow { base, exponent } => {
            wrapped(base, precedence(base) <= PREC_POW, out);
            out.push('^');
            wrapped(exponent, precedence(exponent) < PREC_NEG, out);
        }
        ExprKind::Call { func, arg } => {
            out.push_str(func.name());
            out.push('(');
            write_expr(arg, out);
            out.push(')');
        }
        ExprKind::Integral { integrand, var } => {
            out.push_str("integral(");
            write_expr(integrand, out);
            out.push_str(", ");
            out.push_str(var);
            out.push(')');
        }
        ExprKind::Sum {
            body,
            index,
            lower,
            upper,
        } => {
            out.push_str("sum(");
            write_expr(body, out);
            out.push_str(", ");
            out.push_str(index);
            out.push_str(", ");
            write_expr(lower, out);
            out.push_str(", ");
            write_expr(upper, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::parse_formula;

    #[test]
    fn keeps_structural_parentheses() {
        for text in [
            "a - (b - c)",
            "a / (b * c)",
            "-(a + b) * c",
            "(a ^ b) ^ c",
            "a ^ b ^ c",
            "(-a) ^ 2",
            "a ^ -b",
            "-a ^ 2",
            "a * -b",
            "2.5 * integral(m(t) + 1, t)",
        ] {
            let e = parse_formula(text).unwrap();
            let printed = pretty(&e);
            assert_eq!(parse_formula(&printed).unwrap(), e, "{text} -> {printed}");
        }
    }

    #[test]
    fn drops_redundant_parentheses() {
        let e = parse_formula("((a) + (b * c))").unwrap();
        assert_eq!(pretty(&e), "a + b * c");
    }
}
