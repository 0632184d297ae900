//! Symbolic differentiation, the web frame `∂1, ∂2, δ`, normal forms and
//! zero tests.
//!
//! `W_k` denotes `w^(k)` composed with a base function `f`; differentiation
//! applies the chain rule `∂(W_k) = W_{k+1} ∂f`, so `δ(W_k) = 0`.

mod affine;
pub mod poly;
mod simplify;
mod zero;

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{BinOp, EvalError, Expr, ExprKind, Func, Var, MAX_W_ORDER};

pub use affine::Affine;
pub use simplify::{normal_form, simplify, NormalForm};
pub use zero::{
    is_zero, sign_profile, zero_test, Domain, DomainParseError, SamplePlan, SamplePoint, Sampler, SignProfile,
    Witness, ZeroTest, ZeroVerdict,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalcError {
    #[error("differentiation would produce W{0}, above the supported order {MAX_W_ORDER}")]
    WOrderOverflow(u8),
    #[error("degenerate web: {0}")]
    DegenerateWeb(String),
    #[error("expression is not affine in the W indeterminates: {0}")]
    NotAffine(String),
    #[error("base function must not contain W indeterminates")]
    WInBase,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The function that `W` indeterminates are composed with, together with its
/// first partials.
#[derive(Clone, Debug)]
pub struct WSymbolContext {
    base: Expr,
    base_x: Expr,
    base_y: Expr,
}

impl WSymbolContext {
    pub fn new(base: Expr) -> Result<WSymbolContext, CalcError> {
        if base.contains_w() {
            return Err(CalcError::WInBase);
        }
        let base_x = simplify(&diff_plain(&base, Var::X));
        let base_y = simplify(&diff_plain(&base, Var::Y));
        Ok(WSymbolContext {
            base,
            base_x,
            base_y,
        })
    }

    pub fn base(&self) -> &Expr {
        &self.base
    }

    pub fn base_partial(&self, var: Var) -> &Expr {
        match var {
            Var::X => &self.base_x,
            Var::Y => &self.base_y,
        }
    }
}

/// Partial derivative of `e` with respect to `var`, treating `W_k` as
/// `w^(k)(base)`.
pub fn diff(e: &Expr, var: Var, ctx: &WSymbolContext) -> Result<Expr, CalcError> {
    Differ {
        var,
        ctx: Some(ctx),
        memo: HashMap::new(),
    }
    .go(e)
}

/// Partial derivative of a W-free expression.
pub fn diff_plain(e: &Expr, var: Var) -> Expr {
    Differ {
        var,
        ctx: None,
        memo: HashMap::new(),
    }
    .go(e)
    .expect("W-free expressions differentiate without error")
}

struct Differ<'a> {
    var: Var,
    ctx: Option<&'a WSymbolContext>,
    memo: HashMap<usize, Expr>,
}

impl Differ<'_> {
    fn go(&mut self, e: &Expr) -> Result<Expr, CalcError> {
        if let Some(d) = self.memo.get(&e.id()) {
            return Ok(d.clone());
        }
        let d = match e.kind() {
            ExprKind::Num(_) => Expr::zero(),
            ExprKind::Var(v) => {
                if *v == self.var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            ExprKind::W(k) => {
                let ctx = self.ctx.ok_or(CalcError::WInBase)?;
                if *k >= MAX_W_ORDER {
                    return Err(CalcError::WOrderOverflow(k + 1));
                }
                Expr::w(k + 1) * ctx.base_partial(self.var).clone()
            }
            ExprKind::Neg(a) => -self.go(a)?,
            ExprKind::Binary(op, a, b) => {
                let da = self.go(a)?;
                match op {
                    BinOp::Add => da + self.go(b)?,
                    BinOp::Sub => da - self.go(b)?,
                    BinOp::Mul => {
                        let db = self.go(b)?;
                        da * b.clone() + a.clone() * db
                    }
                    BinOp::Div => {
                        let db = self.go(b)?;
                        if db.is_literal_zero() {
                            da / b.clone()
                        } else {
                            (da * b.clone() - a.clone() * db) / b.clone().pown(2)
                        }
                    }
                    BinOp::Pow => {
                        let db = self.go(b)?;
                        if let Some(n) = b.as_num() {
                            let n1 = Expr::num(n - num_rational::BigRational::from_integer(1.into()));
                            let power = if n1.is_literal_one() {
                                a.clone()
                            } else if n1.is_literal_zero() {
                                Expr::one()
                            } else {
                                Expr::pow(a.clone(), n1)
                            };
                            b.clone() * power * da
                        } else if db.is_literal_zero() {
                            b.clone() * Expr::pow(a.clone(), b.clone() - Expr::one()) * da
                        } else {
                            e.clone()
                                * (db * Expr::log(a.clone()) + b.clone() * da / a.clone())
                        }
                    }
                }
            }
            ExprKind::Call(f, a) => {
                let da = self.go(a)?;
                if da.is_literal_zero() {
                    Expr::zero()
                } else {
                    match f {
                        Func::Exp => e.clone() * da,
                        Func::Log => da / a.clone(),
                        Func::Sin => Expr::cos(a.clone()) * da,
                        Func::Cos => -(Expr::sin(a.clone()) * da),
                        Func::Sqrt => da / (Expr::int(2) * e.clone()),
                    }
                }
            }
        };
        self.memo.insert(e.id(), d.clone());
        Ok(d)
    }
}

/// Formal partial derivative with respect to the indeterminate `W_k`,
/// all other symbols held fixed.
pub fn diff_w(e: &Expr, k: u8) -> Expr {
    fn go(e: &Expr, k: u8, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(d) = memo.get(&e.id()) {
            return d.clone();
        }
        let d = match e.kind() {
            ExprKind::Num(_) | ExprKind::Var(_) => Expr::zero(),
            ExprKind::W(j) => {
                if *j == k {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            ExprKind::Neg(a) => -go(a, k, memo),
            ExprKind::Binary(op, a, b) => {
                let (da, db) = (go(a, k, memo), go(b, k, memo));
                match op {
                    BinOp::Add => da + db,
                    BinOp::Sub => da - db,
                    BinOp::Mul => da * b.clone() + a.clone() * db,
                    BinOp::Div => (da * b.clone() - a.clone() * db) / b.clone().pown(2),
                    BinOp::Pow if db.is_literal_zero() && da.is_literal_zero() => Expr::zero(),
                    BinOp::Pow => {
                        b.clone() * Expr::pow(a.clone(), b.clone() - Expr::one()) * da
                            + e.clone() * Expr::log(a.clone()) * db
                    }
                }
            }
            ExprKind::Call(f, a) => {
                let da = go(a, k, memo);
                if da.is_literal_zero() {
                    Expr::zero()
                } else {
                    match f {
                        Func::Exp => e.clone() * da,
                        Func::Log => da / a.clone(),
                        Func::Sin => Expr::cos(a.clone()) * da,
                        Func::Cos => -(Expr::sin(a.clone()) * da),
                        Func::Sqrt => da / (Expr::int(2) * e.clone()),
                    }
                }
            }
        };
        memo.insert(e.id(), d.clone());
        d
    }
    go(e, k, &mut HashMap::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WebDerivative {
    D1,
    D2,
    Delta,
}

/// The frame `∂1 = -f_x⁻¹ ∂x`, `∂2 = -f_y⁻¹ ∂y` dual to the normalized forms
/// `ω1 = -f_x dx`, `ω2 = -f_y dy`, and `δ = ∂1 - ∂2`.
#[derive(Clone, Debug)]
pub struct WebFrame {
    ctx: WSymbolContext,
}

impl WebFrame {
    /// Fails with `DegenerateWeb` when `f_x` or `f_y` is identically zero.
    pub fn new(f: &Expr) -> Result<WebFrame, CalcError> {
        let ctx = WSymbolContext::new(f.clone())?;
        for (name, d) in [("f_x", ctx.base_partial(Var::X)), ("f_y", ctx.base_partial(Var::Y))] {
            if d.is_literal_zero() {
                return Err(CalcError::DegenerateWeb(format!("{name} vanishes identically")));
            }
        }
        Ok(WebFrame { ctx })
    }

    pub fn f(&self) -> &Expr {
        self.ctx.base()
    }

    pub fn fx(&self) -> &Expr {
        self.ctx.base_partial(Var::X)
    }

    pub fn fy(&self) -> &Expr {
        self.ctx.base_partial(Var::Y)
    }

    pub fn context(&self) -> &WSymbolContext {
        &self.ctx
    }

    pub fn d1(&self, e: &Expr) -> Result<Expr, CalcError> {
        Ok(-(diff(e, Var::X, &self.ctx)? / self.fx().clone()))
    }

    pub fn d2(&self, e: &Expr) -> Result<Expr, CalcError> {
        Ok(-(diff(e, Var::Y, &self.ctx)? / self.fy().clone()))
    }

    pub fn delta(&self, e: &Expr) -> Result<Expr, CalcError> {
        Ok(self.d1(e)? - self.d2(e)?)
    }

    pub fn apply(&self, which: WebDerivative, e: &Expr) -> Result<Expr, CalcError> {
        match which {
            WebDerivative::D1 => self.d1(e),
            WebDerivative::D2 => self.d2(e),
            WebDerivative::Delta => self.delta(e),
        }
    }

    /// `∂1` of a W-free expression.
    pub fn d1_plain(&self, e: &Expr) -> Expr {
        -(diff_plain(e, Var::X) / self.fx().clone())
    }

    pub fn d2_plain(&self, e: &Expr) -> Expr {
        -(diff_plain(e, Var::Y) / self.fy().clone())
    }

    pub fn delta_plain(&self, e: &Expr) -> Expr {
        self.d1_plain(e) - self.d2_plain(e)
    }
}

/// Apply one of the web frame derivatives to `e` for the web function `f`.
pub fn web_derivative(
    e: &Expr,
    which: WebDerivative,
    f: &Expr,
) -> Result<Expr, CalcError> {
    WebFrame::new(f)?.apply(which, e)
}
