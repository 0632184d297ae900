//! Printer producing text that re-parses to the same tree.

use num_traits::{One, Signed};

use super::{BinOp, Expr, ExprKind};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Term,
    Unary,
    Power,
    Atom,
}

pub(super) fn format(e: &Expr) -> String {
    render(e).0
}

fn render(e: &Expr) -> (String, Prec) {
    match e.kind() {
        ExprKind::Num(q) => {
            if q.denom().is_one() {
                let p = if q.is_negative() { Prec::Unary } else { Prec::Atom };
                (q.numer().to_string(), p)
            } else {
                (format!("{}/{}", q.numer(), q.denom()), Prec::Term)
            }
        }
        ExprKind::Var(v) => (v.name().to_string(), Prec::Atom),
        ExprKind::W(k) => (format!("W{k}"), Prec::Atom),
        ExprKind::Neg(a) => (format!("-{}", operand(a, Prec::Unary, false)), Prec::Unary),
        ExprKind::Call(f, a) => (format!("{}({})", f.name(), render(a).0), Prec::Atom),
        ExprKind::Binary(op, a, b) => match op {
            BinOp::Add | BinOp::Sub => {
                let sym = if *op == BinOp::Add { "+" } else { "-" };
                (
                    format!(
                        "{} {sym} {}",
                        operand(a, Prec::Sum, false),
                        operand(b, Prec::Term, true)
                    ),
                    Prec::Sum,
                )
            }
            BinOp::Mul | BinOp::Div => {
                let sym = if *op == BinOp::Mul { "*" } else { "/" };
                (
                    format!(
                        "{}{sym}{}",
                        operand(a, Prec::Term, false),
                        operand(b, Prec::Unary, true)
                    ),
                    Prec::Term,
                )
            }
            BinOp::Pow => (
                format!(
                    "{}^{}",
                    operand(a, Prec::Atom, false),
                    operand(b, Prec::Unary, true)
                ),
                Prec::Power,
            ),
        },
    }
}

/// Render `e` as an operand that needs at least precedence `min`. Right-hand
/// operands that start with a minus sign are parenthesized for readability.
fn operand(e: &Expr, min: Prec, right: bool) -> String {
    let (s, p) = render(e);
    if p < min || (right && s.starts_with('-')) {
        format!("({s})")
    } else {
        s
    }
}
