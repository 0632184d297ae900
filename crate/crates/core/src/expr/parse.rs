//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum    := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(BigRational),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_whitespace() {
                lx.pos += 1;
            }
            let start = lx.pos;
            let Some(&c) = lx.src.get(lx.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            let tok = match c {
                b'a'..=b'z' => {
                    while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_lowercase() {
                        lx.pos += 1;
                    }
                    Tok::Ident(text[start..lx.pos].to_string())
                }
                b'0'..=b'9' | b'.' => lx.number(start)?,
                b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                    lx.pos += 1;
                    Tok::Sym(c as char)
                }
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            };
            out.push((tok, start));
        }
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let digits = |lx: &mut Lexer| {
            let s = lx.pos;
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            s..lx.pos
        };
        let int_part = digits(self);
        let mut frac_part = self.pos..self.pos;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = digits(self);
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        let as_int = |r: std::ops::Range<usize>| -> BigInt {
            if r.is_empty() {
                BigInt::zero()
            } else {
                std::str::from_utf8(&self.src[r.clone()])
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or_default()
            }
        };
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let value = BigRational::new(as_int(int_part) * &scale + as_int(frac_part), scale);
        Ok(Tok::Number(value))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{c}`, found {}", describe(self.peek())))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Number(q) => {
                self.bump();
                Ok(Expr::num(q))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::var(Var::X)),
                    "y" => Ok(Expr::var(Var::Y)),
                    _ => match Func::from_name(&name) {
                        Some(f) => {
                            self.expect('(')?;
                            let arg = self.sum()?;
                            self.expect(')')?;
                            Ok(Expr::call(f, arg))
                        }
                        None => Err(ParseError::UnknownIdentifier { offset, name }),
                    },
                }
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            other => self.error(format!("expected an operand, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(q) if q.denom().is_one() => format!("`{}`", q.numer()),
        Tok::Number(q) => format!("`{q}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of input".into(),
    }
}

/// Parse user input. `W` indeterminates are not part of the input language.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, at: 0 };
    if *p.peek() == Tok::End {
        return p.error("empty expression");
    }
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinOp, ExprKind};

    #[test]
    fn precedence_and_shape() {
        let e = parse("x^2 + y").unwrap();
        assert_eq!(e, Expr::add(Expr::pow(Expr::x(), Expr::int(2)), Expr::y()));
        let e = parse("exp(x*y)").unwrap();
        assert_eq!(e, Expr::exp(Expr::mul(Expr::x(), Expr::y())));
        // right associative power, unary minus looser than ^
        assert_eq!(
            parse("2^x^y").unwrap(),
            Expr::pow(Expr::int(2), Expr::pow(Expr::x(), Expr::y()))
        );
        assert_eq!(
            parse("-x^2").unwrap(),
            Expr::neg(Expr::pow(Expr::x(), Expr::int(2)))
        );
        assert_eq!(
            parse("x - y - 1").unwrap(),
            Expr::sub(Expr::sub(Expr::x(), Expr::y()), Expr::int(1))
        );
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("1.5").unwrap(), Expr::ratio(3, 2));
        assert_eq!(parse(".25").unwrap(), Expr::ratio(1, 4));
        assert_eq!(parse("-2").unwrap(), Expr::int(-2));
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse("x +* y").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 3, .. }), "{err:?}");
        assert!(matches!(parse("").unwrap_err(), ParseError::Syntax { offset: 0, .. }));
        assert!(matches!(parse("(x").unwrap_err(), ParseError::Syntax { offset: 2, .. }));
        assert!(matches!(parse("x y").unwrap_err(), ParseError::Syntax { offset: 2, .. }));
    }

    #[test]
    fn rejects_unknown_and_w_tokens() {
        assert_eq!(
            parse("x + z").unwrap_err(),
            ParseError::UnknownIdentifier {
                offset: 4,
                name: "z".into()
            }
        );
        assert!(matches!(parse("W1 + x").unwrap_err(), ParseError::Syntax { offset: 0, .. }));
        assert!(matches!(
            parse("tan(x)").unwrap_err(),
            ParseError::UnknownIdentifier { .. }
        ));
    }

    #[test]
    fn function_needs_parens() {
        assert!(parse("exp x").is_err());
        assert!(matches!(
            parse("log(x)").unwrap().kind(),
            ExprKind::Call(Func::Log, _)
        ));
        assert!(matches!(
            parse("x/y").unwrap().kind(),
            ExprKind::Binary(BinOp::Div, _, _)
        ));
    }
}
