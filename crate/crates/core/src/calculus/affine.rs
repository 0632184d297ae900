//! Expressions affine in `W1..W6` with W-free coefficients.

use std::collections::HashMap;
use std::fmt;

use super::{diff_plain, CalcError, WSymbolContext, WebFrame};
use crate::expr::{BinOp, Expr, ExprKind, Var, MAX_W_ORDER};

const LEN: usize = MAX_W_ORDER as usize + 1;

/// `c0 + c1 W1 + ... + c6 W6`; slot 0 is the W-free part.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Affine {
    coeffs: [Expr; LEN],
}

impl Affine {
    pub fn zero() -> Affine {
        Affine {
            coeffs: std::array::from_fn(|_| Expr::zero()),
        }
    }

    pub fn constant(e: Expr) -> Affine {
        let mut a = Affine::zero();
        a.coeffs[0] = e;
        a
    }

    /// `c W_k`.
    pub fn term(k: u8, c: Expr) -> Affine {
        let mut a = Affine::zero();
        a.coeffs[k as usize] = c;
        a
    }

    /// Coefficient of `W_k`; `k = 0` gives the W-free part.
    pub fn coeff(&self, k: u8) -> &Expr {
        &self.coeffs[k as usize]
    }

    pub fn set_coeff(&mut self, k: u8, c: Expr) {
        self.coeffs[k as usize] = c;
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// Highest `k ≥ 1` whose coefficient is not a literal zero.
    pub fn order(&self) -> Option<u8> {
        (1..LEN)
            .rev()
            .find(|&k| !self.coeffs[k].is_literal_zero())
            .map(|k| k as u8)
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> Affine {
        Affine {
            coeffs: std::array::from_fn(|k| f(&self.coeffs[k])),
        }
    }

    pub fn try_map(
        &self,
        mut f: impl FnMut(&Expr) -> Result<Expr, CalcError>,
    ) -> Result<Affine, CalcError> {
        let mut out = Affine::zero();
        for k in 0..LEN {
            out.coeffs[k] = f(&self.coeffs[k])?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Affine) -> Affine {
        Affine {
            coeffs: std::array::from_fn(|k| self.coeffs[k].clone() + other.coeffs[k].clone()),
        }
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        Affine {
            coeffs: std::array::from_fn(|k| self.coeffs[k].clone() - other.coeffs[k].clone()),
        }
    }

    pub fn scale(&self, c: &Expr) -> Affine {
        self.map(|e| e.clone() * c.clone())
    }

    pub fn neg(&self) -> Affine {
        self.map(|e| -e.clone())
    }

    pub fn to_expr(&self) -> Expr {
        let mut out = self.coeffs[0].clone();
        for k in 1..LEN {
            out = out + self.coeffs[k].clone() * Expr::w(k as u8);
        }
        out
    }

    /// Splits `e` into W-coefficients; fails when `e` is not structurally
    /// affine in the `W` indeterminates.
    pub fn from_expr(e: &Expr) -> Result<Affine, CalcError> {
        split(e, &mut HashMap::new()).map_err(|()| CalcError::NotAffine(e.to_string()))
    }

    /// `∂x` or `∂y` of the row: `∂(c W_k) = ∂(c) W_k + c ∂(f) W_{k+1}`.
    pub fn partial(&self, var: Var, ctx: &WSymbolContext) -> Result<Affine, CalcError> {
        if !self.coeffs[LEN - 1].is_literal_zero() {
            return Err(CalcError::WOrderOverflow(MAX_W_ORDER + 1));
        }
        let df = ctx.base_partial(var);
        let mut out = Affine::zero();
        for k in 0..LEN {
            let mut c = diff_plain(&self.coeffs[k], var);
            if k >= 2 {
                c = c + self.coeffs[k - 1].clone() * df.clone();
            }
            out.coeffs[k] = c;
        }
        Ok(out)
    }

    /// `∂1` of the row: `∂1(c W_k) = ∂1(c) W_k - c W_{k+1}`.
    pub fn d1(&self, frame: &WebFrame) -> Result<Affine, CalcError> {
        self.shifted(|c| frame.d1_plain(c))
    }

    /// `∂2(c W_k) = ∂2(c) W_k - c W_{k+1}`.
    pub fn d2(&self, frame: &WebFrame) -> Result<Affine, CalcError> {
        self.shifted(|c| frame.d2_plain(c))
    }

    /// `δ` annihilates every `W_k`, so it acts on coefficients only.
    pub fn delta(&self, frame: &WebFrame) -> Affine {
        self.map(|c| frame.delta_plain(c))
    }

    /// Prolongation `D = -∂1`, the total derivative along the `f` foliation
    /// normalized so that `D(W_k) = W_{k+1}`.
    pub fn prolong(&self, frame: &WebFrame) -> Result<Affine, CalcError> {
        Ok(self.d1(frame)?.neg())
    }

    fn shifted(&self, mut d: impl FnMut(&Expr) -> Expr) -> Result<Affine, CalcError> {
        if !self.coeffs[LEN - 1].is_literal_zero() {
            return Err(CalcError::WOrderOverflow(MAX_W_ORDER + 1));
        }
        let mut out = Affine::zero();
        for k in 0..LEN {
            let mut c = d(&self.coeffs[k]);
            if k >= 2 {
                c = c - self.coeffs[k - 1].clone();
            }
            out.coeffs[k] = c;
        }
        Ok(out)
    }
}

impl fmt::Debug for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

fn split(e: &Expr, memo: &mut HashMap<usize, (Expr, Affine)>) -> Result<Affine, ()> {
    if !e.contains_w() {
        return Ok(Affine::constant(e.clone()));
    }
    if let Some((_, a)) = memo.get(&e.id()) {
        return Ok(a.clone());
    }
    let a = match e.kind() {
        ExprKind::W(k) => {
            if *k == 0 {
                return Err(());
            }
            Affine::term(*k, Expr::one())
        }
        ExprKind::Neg(a) => split(a, memo)?.neg(),
        ExprKind::Binary(op, a, b) => match op {
            BinOp::Add => split(a, memo)?.add(&split(b, memo)?),
            BinOp::Sub => split(a, memo)?.sub(&split(b, memo)?),
            BinOp::Mul if !a.contains_w() => split(b, memo)?.scale(a),
            BinOp::Mul if !b.contains_w() => split(a, memo)?.scale(b),
            BinOp::Div if !b.contains_w() => split(a, memo)?.map(|c| c.clone() / b.clone()),
            BinOp::Pow if b.is_literal_one() => split(a, memo)?,
            _ => return Err(()),
        },
        _ => return Err(()),
    };
    memo.insert(e.id(), (e.clone(), a.clone()));
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::simplify;
    use crate::expr::parse;

    fn p(t: &str) -> Expr {
        parse(t).unwrap()
    }

    #[test]
    fn split_round_trip() {
        let e = Expr::add(
            Expr::mul(p("x"), Expr::w(2)),
            Expr::div(Expr::sub(Expr::w(1), p("y")), p("x + 1")),
        );
        let a = Affine::from_expr(&e).unwrap();
        assert_eq!(simplify(a.coeff(2)), p("x"));
        assert_eq!(simplify(a.coeff(1)), simplify(&p("1/(x + 1)")));
        assert_eq!(simplify(a.coeff(0)), simplify(&p("-y/(x + 1)")));
        assert_eq!(a.order(), Some(2));
        assert_eq!(simplify(&a.to_expr()), simplify(&e));
    }

    #[test]
    fn nonlinear_rejected() {
        let e = Expr::mul(Expr::w(1), Expr::w(2));
        assert!(Affine::from_expr(&e).is_err());
        let e = Expr::exp(Expr::w(1));
        assert!(Affine::from_expr(&e).is_err());
        let e = Expr::div(p("x"), Expr::w(1));
        assert!(Affine::from_expr(&e).is_err());
    }

    #[test]
    fn frame_operators_agree_with_expression_derivatives() {
        let frame = WebFrame::new(&p("x^2 + x*y")).unwrap();
        let row = Affine::term(2, p("x*y")).add(&Affine::term(1, p("y^2")));
        let direct = simplify(&frame.d1(&row.to_expr()).unwrap());
        let via_row = simplify(&row.d1(&frame).unwrap().to_expr());
        assert_eq!(direct, via_row);
        let direct = simplify(&frame.d2(&row.to_expr()).unwrap());
        let via_row = simplify(&row.d2(&frame).unwrap().to_expr());
        assert_eq!(direct, via_row);
        let direct = simplify(&frame.delta(&row.to_expr()).unwrap());
        let via_row = simplify(&row.delta(&frame).to_expr());
        assert_eq!(direct, via_row);
    }

    #[test]
    fn partial_matches_chain_rule() {
        let frame = WebFrame::new(&p("x^2 + x*y")).unwrap();
        let row = Affine::term(2, p("x*y")).add(&Affine::constant(p("y^2")));
        for var in [Var::X, Var::Y] {
            let direct = crate::calculus::diff(&row.to_expr(), var, frame.context()).unwrap();
            let via_row = row.partial(var, frame.context()).unwrap();
            assert_eq!(simplify(&direct), simplify(&via_row.to_expr()));
        }
    }

    #[test]
    fn prolongation_raises_order() {
        let frame = WebFrame::new(&p("x + y")).unwrap();
        let row = Affine::term(3, Expr::one());
        let d = row.prolong(&frame).unwrap();
        assert_eq!(d.order(), Some(4));
        assert_eq!(simplify(d.coeff(4)), Expr::one());
        assert!(Affine::term(6, Expr::one()).prolong(&frame).is_err());
    }
}
