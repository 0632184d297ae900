//! Truncated bivariate Taylor arithmetic.
//!
//! A series of order `m` stores the coefficients `c[i][j]` of
//! `(x - x0)^i (y - y0)^j` for `i + j <= m`. One bottom-up pass over an
//! expression yields every partial derivative up to order `m`:
//! `∂x^i ∂y^j e = i! j! c[i][j]`.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{rational_to_f64, BinOp, Expr, ExprKind, Func, Var};

pub const MAX_JET_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("no exact image: {0}")]
    Exactness(String),
    #[error("jet order {0} exceeds {MAX_JET_ORDER}")]
    Order(usize),
    #[error("expression contains W indeterminates")]
    ContainsW,
}

/// Coefficient field for jets.
pub trait JetScalar:
    Clone
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(q: &BigRational) -> Self;
    fn from_int(n: i64) -> Self;
    fn is_zero_value(&self) -> bool;
    fn is_finite_value(&self) -> bool;
    /// Taylor coefficients `g^(k)(u0) / k!` for `k = 0..=m`.
    fn taylor(f: Func, u0: &Self, m: usize) -> Result<Vec<Self>, JetError>;
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// Taylor coefficients of `f` at `u0` from its value there (`base`) and,
/// for sin and cos, the value of the companion function (`other`).
fn taylor_from_values<T: JetScalar>(
    f: Func,
    u0: &T,
    m: usize,
    base: impl FnOnce() -> Result<T, JetError>,
    other: impl FnOnce() -> Result<T, JetError>,
) -> Result<Vec<T>, JetError> {
    let int = T::from_int;
    let mut out = Vec::with_capacity(m + 1);
    match f {
        Func::Exp => {
            let e = base()?;
            for k in 0..=m {
                out.push(e.clone() / int(factorial(k)));
            }
        }
        Func::Log => {
            out.push(base()?);
            let mut pow = u0.clone();
            for k in 1..=m {
                let sign = if k % 2 == 1 { 1 } else { -1 };
                out.push(int(sign) / (int(k as i64) * pow.clone()));
                pow = pow * u0.clone();
            }
        }
        Func::Sin | Func::Cos => {
            let (s, c) = if f == Func::Sin {
                (base()?, other()?)
            } else {
                (other()?, base()?)
            };
            // d^k sin = sin, cos, -sin, -cos, ...; cos shifts by one
            let cycle = [s.clone(), c.clone(), -s, -c];
            let shift = if f == Func::Sin { 0 } else { 1 };
            for k in 0..=m {
                out.push(cycle[(k + shift) % 4].clone() / int(factorial(k)));
            }
        }
        Func::Sqrt => {
            let r = base()?;
            // binom(1/2, k) r / u0^k
            let mut binom_num = int(1);
            let mut binom_den = int(1);
            let mut pow = int(1);
            for k in 0..=m {
                out.push(binom_num.clone() * r.clone() / (binom_den.clone() * pow.clone()));
                let k = k as i64;
                binom_num = binom_num * int(1 - 2 * k);
                binom_den = binom_den * int(2 * (k + 1));
                pow = pow * u0.clone();
            }
        }
    }
    Ok(out)
}

impl JetScalar for f64 {
    fn from_rational(q: &BigRational) -> f64 {
        rational_to_f64(q)
    }

    fn from_int(n: i64) -> f64 {
        n as f64
    }

    fn is_zero_value(&self) -> bool {
        *self == 0.0
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn taylor(f: Func, u0: &f64, m: usize) -> Result<Vec<f64>, JetError> {
        let u = *u0;
        match f {
            Func::Log if u <= 0.0 => {
                return Err(JetError::Domain(format!("log of nonpositive {u}")))
            }
            Func::Sqrt if u < 0.0 => {
                return Err(JetError::Domain(format!("sqrt of negative {u}")))
            }
            Func::Sqrt if u == 0.0 => return Err(JetError::Pole("sqrt at 0".into())),
            _ => {}
        }
        taylor_from_values(
            f,
            u0,
            m,
            || {
                Ok(match f {
                    Func::Exp => u.exp(),
                    Func::Log => u.ln(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Sqrt => u.sqrt(),
                })
            },
            || Ok(if f == Func::Sin { u.cos() } else { u.sin() }),
        )
    }
}

impl JetScalar for BigRational {
    fn from_rational(q: &BigRational) -> BigRational {
        q.clone()
    }

    fn from_int(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn taylor(f: Func, u0: &BigRational, m: usize) -> Result<Vec<BigRational>, JetError> {
        let inexact = || JetError::Exactness(format!("{}({u0})", f.name()));
        match f {
            Func::Log if !u0.is_positive() => {
                return Err(JetError::Domain(format!("log of nonpositive {u0}")))
            }
            Func::Sqrt if u0.is_negative() => {
                return Err(JetError::Domain(format!("sqrt of negative {u0}")))
            }
            Func::Sqrt if u0.is_zero() => return Err(JetError::Pole("sqrt at 0".into())),
            _ => {}
        }
        let base = || -> Result<BigRational, JetError> {
            match f {
                Func::Exp | Func::Cos if u0.is_zero() => Ok(BigRational::one()),
                Func::Sin if u0.is_zero() => Ok(BigRational::zero()),
                Func::Log if u0.is_one() => Ok(BigRational::zero()),
                Func::Sqrt => exact_sqrt(u0).ok_or_else(inexact),
                _ => Err(inexact()),
            }
        };
        let other = || -> Result<BigRational, JetError> {
            if u0.is_zero() {
                Ok(if f == Func::Sin {
                    BigRational::one()
                } else {
                    BigRational::zero()
                })
            } else {
                Err(inexact())
            }
        };
        taylor_from_values(f, u0, m, base, other)
    }
}

fn exact_sqrt(q: &BigRational) -> Option<BigRational> {
    let root = |n: &BigInt| {
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    };
    Some(BigRational::new(root(q.numer())?, root(q.denom())?))
}

/// Truncated bivariate Taylor series.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T> {
    order: usize,
    coeffs: Vec<T>,
}

fn index(i: usize, j: usize) -> usize {
    // triangle laid out by total degree, then by j
    let d = i + j;
    d * (d + 1) / 2 + j
}

impl<T: JetScalar> Series<T> {
    pub fn constant(c: T, order: usize) -> Series<T> {
        let mut coeffs = vec![T::from_int(0); index(0, order) + 1];
        coeffs[0] = c;
        Series { order, coeffs }
    }

    /// The coordinate `var` expanded at `at`.
    pub fn variable(var: Var, at: T, order: usize) -> Series<T> {
        let mut s = Series::constant(at, order);
        if order >= 1 {
            let k = match var {
                Var::X => index(1, 0),
                Var::Y => index(0, 1),
            };
            s.coeffs[k] = T::from_int(1);
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, i: usize, j: usize) -> &T {
        &self.coeffs[index(i, j)]
    }

    pub fn value(&self) -> &T {
        &self.coeffs[0]
    }

    // Operands of different orders combine at the lower order; the
    // triangle layout makes a lower-order series a prefix of a higher one.
    fn zip(&self, other: &Series<T>, op: impl Fn(T, T) -> T) -> Series<T> {
        Series {
            order: self.order.min(other.order),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| op(a.clone(), b.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Series<T>) -> Series<T> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Series<T>) -> Series<T> {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Series<T> {
        Series {
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Series<T> {
        Series {
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &Series<T>) -> Series<T> {
        let m = self.order.min(other.order);
        let mut out = Series::constant(T::from_int(0), m);
        for d in 0..=m {
            for j in 0..=d {
                let i = d - j;
                let mut acc = T::from_int(0);
                for p in 0..=i {
                    for q in 0..=j {
                        let a = self.coeff(p, q);
                        if a.is_zero_value() {
                            continue;
                        }
                        acc = acc + a.clone() * other.coeff(i - p, j - q).clone();
                    }
                }
                out.coeffs[index(i, j)] = acc;
            }
        }
        out
    }

    pub fn div(&self, other: &Series<T>) -> Result<Series<T>, JetError> {
        let b0 = other.value().clone();
        if b0.is_zero_value() {
            return Err(JetError::Pole("division by a series vanishing at the point".into()));
        }
        let m = self.order.min(other.order);
        let mut out = Series::constant(T::from_int(0), m);
        for d in 0..=m {
            for j in 0..=d {
                let i = d - j;
                let mut acc = self.coeff(i, j).clone();
                for p in 0..=i {
                    for q in 0..=j {
                        if p + q == 0 {
                            continue;
                        }
                        let b = other.coeff(p, q);
                        if b.is_zero_value() {
                            continue;
                        }
                        acc = acc - b.clone() * out.coeff(i - p, j - q).clone();
                    }
                }
                out.coeffs[index(i, j)] = acc / b0.clone();
            }
        }
        Ok(out)
    }

    pub fn powi(&self, n: i64) -> Result<Series<T>, JetError> {
        let mut result = Series::constant(T::from_int(1), self.order);
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        if n < 0 {
            Series::constant(T::from_int(1), self.order).div(&result)
        } else {
            Ok(result)
        }
    }

    /// `g(u)` for an elementary `g`, by composing the univariate Taylor
    /// expansion of `g` at `u(x0, y0)` with `u - u(x0, y0)`.
    pub fn apply(&self, f: Func) -> Result<Series<T>, JetError> {
        let m = self.order;
        let taylor = T::taylor(f, self.value(), m)?;
        let mut v = self.clone();
        v.coeffs[0] = T::from_int(0);
        let mut out = Series::constant(taylor[0].clone(), m);
        let mut vk = Series::constant(T::from_int(1), m);
        for t in taylor.iter().skip(1) {
            vk = vk.mul(&v);
            out = out.add(&vk.scale(t));
        }
        Ok(out)
    }

    /// `∂x` or `∂y` of the series, truncated to order `m - 1`.
    pub fn partial(&self, var: Var) -> Series<T> {
        let m = self.order.saturating_sub(1);
        let mut out = Series::constant(T::from_int(0), m);
        for d in 0..=m {
            for j in 0..=d {
                let i = d - j;
                let (c, k) = match var {
                    Var::X => (self.coeff(i + 1, j), i + 1),
                    Var::Y => (self.coeff(i, j + 1), j + 1),
                };
                out.coeffs[index(i, j)] = c.clone() * T::from_int(k as i64);
            }
        }
        out
    }
}

/// All partial derivatives `∂x^i ∂y^j e` with `i + j <= order` at `point`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetTable<T> {
    pub point: (T, T),
    pub order: usize,
    series: Series<T>,
}

impl<T: JetScalar> JetTable<T> {
    /// The derivative `∂x^i ∂y^j`, or `None` when `i + j > order`.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        (i + j <= self.order).then(|| {
            self.series.coeff(i, j).clone() * T::from_int(factorial(i) * factorial(j))
        })
    }

    pub fn value(&self) -> &T {
        self.series.value()
    }

    pub fn series(&self) -> &Series<T> {
        &self.series
    }
}

/// Float jet of `e` at `point`.
pub fn jet_eval(e: &Expr, point: (f64, f64), order: usize) -> Result<JetTable<f64>, JetError> {
    jet_eval_generic(e, point, order)
}

/// Exact jet of `e` at a rational point. Transcendental nodes need an
/// exact image at the expansion point.
pub fn jet_eval_exact(
    e: &Expr,
    point: (BigRational, BigRational),
    order: usize,
) -> Result<JetTable<BigRational>, JetError> {
    jet_eval_generic(e, point, order)
}

pub fn jet_eval_generic<T: JetScalar>(
    e: &Expr,
    point: (T, T),
    order: usize,
) -> Result<JetTable<T>, JetError> {
    if order > MAX_JET_ORDER {
        return Err(JetError::Order(order));
    }
    let series = series_at(e, point.clone(), order)?;
    Ok(JetTable {
        point,
        order,
        series,
    })
}

/// The Taylor series of `e` at `point`, without the order cap that applies
/// to derivative tables.
pub(crate) fn series_at<T: JetScalar>(
    e: &Expr,
    point: (T, T),
    order: usize,
) -> Result<Series<T>, JetError> {
    if e.contains_w() {
        return Err(JetError::ContainsW);
    }
    let mut ev = JetEvaluator {
        x: Series::variable(Var::X, point.0.clone(), order),
        y: Series::variable(Var::Y, point.1.clone(), order),
        order,
        memo: HashMap::new(),
    };
    let series = ev.eval(e)?;
    if !series.coeffs.iter().all(|c| c.is_finite_value()) {
        return Err(JetError::Domain("non-finite jet coefficient".into()));
    }
    Ok(series)
}

struct JetEvaluator<T> {
    x: Series<T>,
    y: Series<T>,
    order: usize,
    memo: HashMap<usize, Series<T>>,
}

impl<T: JetScalar> JetEvaluator<T> {
    fn eval(&mut self, e: &Expr) -> Result<Series<T>, JetError> {
        if let Some(s) = self.memo.get(&e.id()) {
            return Ok(s.clone());
        }
        let s = match e.kind() {
            ExprKind::Num(q) => Series::constant(T::from_rational(q), self.order),
            ExprKind::Var(Var::X) => self.x.clone(),
            ExprKind::Var(Var::Y) => self.y.clone(),
            ExprKind::W(_) => return Err(JetError::ContainsW),
            ExprKind::Neg(a) => self.eval(a)?.neg(),
            ExprKind::Binary(op, a, b) => {
                let sa = self.eval(a)?;
                match op {
                    BinOp::Add => sa.add(&self.eval(b)?),
                    BinOp::Sub => sa.sub(&self.eval(b)?),
                    BinOp::Mul => sa.mul(&self.eval(b)?),
                    BinOp::Div => sa.div(&self.eval(b)?)?,
                    BinOp::Pow => match b.as_integer().and_then(|n| n.to_i64()) {
                        Some(n) => sa.powi(n)?,
                        None => {
                            let sb = self.eval(b)?;
                            sb.mul(&sa.apply(Func::Log)?).apply(Func::Exp)?
                        }
                    },
                }
            }
            ExprKind::Call(f, a) => self.eval(a)?.apply(*f)?,
        };
        self.memo.insert(e.id(), s.clone());
        Ok(s)
    }
}
