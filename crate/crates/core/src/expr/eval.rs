//! Evaluation in exact-rational and double-precision modes.
//!
//! Expressions are compiled into a [`Tape`]: a topologically ordered list of
//! instructions in which structurally identical subtrees occupy one slot. A
//! tape is compiled once and evaluated at many points.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{rational_from_f64, rational_to_f64, BinOp, Expr, ExprKind, Func, Symbol, Var};

/// Largest integer exponent evaluated exactly.
const MAX_EXACT_EXPONENT: i64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => Err(format!("unknown mode `{s}` (expected exact or float)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => rational_to_f64(q),
            Value::Float(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(q) => q.is_zero(),
            Value::Float(v) => *v == 0.0,
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Value {
        Value::Exact(BigRational::from_integer(n.into()))
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Value {
        Value::Float(v)
    }
}

impl From<BigRational> for Value {
    fn from(q: BigRational) -> Value {
        Value::Exact(q)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no exact value for {0}")]
    ExactnessError(String),
    #[error("unbound symbol {0}")]
    UnboundVariable(Symbol),
}

/// Values for the free symbols of an expression.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    values: BTreeMap<Symbol, Value>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn xy(x: impl Into<Value>, y: impl Into<Value>) -> Bindings {
        let mut b = Bindings::new();
        b.set(Symbol::Var(Var::X), x);
        b.set(Symbol::Var(Var::Y), y);
        b
    }

    pub fn with(mut self, s: Symbol, v: impl Into<Value>) -> Bindings {
        self.set(s, v);
        self
    }

    pub fn set(&mut self, s: Symbol, v: impl Into<Value>) {
        self.values.insert(s, v.into());
    }

    pub fn get(&self, s: Symbol) -> Option<&Value> {
        self.values.get(&s)
    }
}

/// Number of evaluation slots: x, y, W0..W6.
pub const SLOTS: usize = 9;

/// Slot index of a symbol in a slot array.
pub fn slot(s: Symbol) -> usize {
    match s {
        Symbol::Var(Var::X) => 0,
        Symbol::Var(Var::Y) => 1,
        Symbol::W(k) => 2 + k as usize,
    }
}

fn slot_symbol(i: usize) -> Symbol {
    match i {
        0 => Symbol::Var(Var::X),
        1 => Symbol::Var(Var::Y),
        k => Symbol::W((k - 2) as u8),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Instr {
    Const(BigRational),
    Sym(usize),
    Neg(usize),
    Bin(BinOp, usize, usize),
    Call(Func, usize),
}

/// Compiled, deduplicated evaluation program for one or more expressions.
#[derive(Clone, Debug)]
pub struct Tape {
    instrs: Vec<Instr>,
    consts_f: Vec<f64>,
    outputs: Vec<usize>,
}

impl Tape {
    pub fn compile<'a>(roots: impl IntoIterator<Item = &'a Expr>) -> Tape {
        let mut instrs = Vec::new();
        let mut dedup: HashMap<Instr, usize> = HashMap::new();
        let mut by_ptr: HashMap<usize, usize> = HashMap::new();
        let mut outputs = Vec::new();
        for root in roots {
            // explicit stack keeps deep trees off the call stack
            let mut stack: Vec<(&Expr, bool)> = vec![(root, false)];
            while let Some((e, expanded)) = stack.pop() {
                if by_ptr.contains_key(&e.id()) {
                    continue;
                }
                if !expanded {
                    stack.push((e, true));
                    for c in e.children().into_iter().rev() {
                        stack.push((c, false));
                    }
                    continue;
                }
                let ix = |c: &Expr| by_ptr[&c.id()];
                let ins = match e.kind() {
                    ExprKind::Num(q) => Instr::Const(q.clone()),
                    ExprKind::Var(v) => Instr::Sym(slot(Symbol::Var(*v))),
                    ExprKind::W(k) => Instr::Sym(slot(Symbol::W(*k))),
                    ExprKind::Neg(a) => Instr::Neg(ix(a)),
                    ExprKind::Binary(op, a, b) => Instr::Bin(*op, ix(a), ix(b)),
                    ExprKind::Call(f, a) => Instr::Call(*f, ix(a)),
                };
                let at = *dedup.entry(ins.clone()).or_insert_with(|| {
                    instrs.push(ins);
                    instrs.len() - 1
                });
                by_ptr.insert(e.id(), at);
            }
            outputs.push(by_ptr[&root.id()]);
        }
        let consts_f = instrs
            .iter()
            .map(|i| match i {
                Instr::Const(q) => rational_to_f64(q),
                _ => 0.0,
            })
            .collect();
        Tape {
            instrs,
            consts_f,
            outputs,
        }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Double-precision evaluation. `slots` holds x, y, W0..W6.
    pub fn eval_f64(&self, slots: &[Option<f64>; SLOTS]) -> Result<Vec<f64>, EvalError> {
        Ok(self
            .eval_f64_scaled(slots)?
            .into_iter()
            .map(|(v, _)| v)
            .collect())
    }

    /// Double-precision evaluation that also propagates a first-order
    /// rounding scale for each output: a magnitude such that the absolute
    /// error of the value is a small multiple of `scale * eps`.
    pub fn eval_f64_scaled(
        &self,
        slots: &[Option<f64>; SLOTS],
    ) -> Result<Vec<(f64, f64)>, EvalError> {
        let mut v: Vec<(f64, f64)> = Vec::with_capacity(self.instrs.len());
        for (i, ins) in self.instrs.iter().enumerate() {
            let r = match ins {
                Instr::Const(_) => {
                    let c = self.consts_f[i];
                    (c, c.abs())
                }
                Instr::Sym(s) => {
                    let val = slots[*s].ok_or(EvalError::UnboundVariable(slot_symbol(*s)))?;
                    (val, val.abs())
                }
                Instr::Neg(a) => (-v[*a].0, v[*a].1),
                Instr::Bin(op, a, b) => float_binary(*op, v[*a], v[*b])?,
                Instr::Call(f, a) => float_call(*f, v[*a])?,
            };
            if !r.0.is_finite() || !r.1.is_finite() {
                return Err(EvalError::DomainError("non-finite intermediate value".into()));
            }
            v.push(r);
        }
        Ok(self.outputs.iter().map(|&o| v[o]).collect())
    }

    /// Exact rational evaluation. `slots` holds x, y, W0..W6.
    pub fn eval_exact(
        &self,
        slots: &[Option<BigRational>; SLOTS],
    ) -> Result<Vec<BigRational>, EvalError> {
        let mut v: Vec<BigRational> = Vec::with_capacity(self.instrs.len());
        for ins in &self.instrs {
            let r = match ins {
                Instr::Const(q) => q.clone(),
                Instr::Sym(s) => slots[*s]
                    .clone()
                    .ok_or(EvalError::UnboundVariable(slot_symbol(*s)))?,
                Instr::Neg(a) => -&v[*a],
                Instr::Bin(op, a, b) => exact_binary(*op, &v[*a], &v[*b])?,
                Instr::Call(f, a) => exact_call(*f, &v[*a])?,
            };
            v.push(r);
        }
        Ok(self.outputs.iter().map(|&o| v[o].clone()).collect())
    }

    pub fn eval(&self, env: &Bindings, mode: Mode) -> Result<Vec<Value>, EvalError> {
        match mode {
            Mode::Exact => {
                let mut slots: [Option<BigRational>; SLOTS] = Default::default();
                for (i, s) in slots.iter_mut().enumerate() {
                    *s = match env.get(slot_symbol(i)) {
                        Some(Value::Exact(q)) => Some(q.clone()),
                        Some(Value::Float(f)) => Some(rational_from_f64(*f).ok_or_else(|| {
                            EvalError::DomainError("non-finite binding".into())
                        })?),
                        None => None,
                    };
                }
                Ok(self.eval_exact(&slots)?.into_iter().map(Value::Exact).collect())
            }
            Mode::Float => {
                let mut slots = [None; SLOTS];
                for (i, s) in slots.iter_mut().enumerate() {
                    *s = env.get(slot_symbol(i)).map(Value::to_f64);
                }
                Ok(self.eval_f64(&slots)?.into_iter().map(Value::Float).collect())
            }
        }
    }
}

fn float_binary(op: BinOp, (a, ma): (f64, f64), (b, mb): (f64, f64)) -> Result<(f64, f64), EvalError> {
    Ok(match op {
        BinOp::Add => (a + b, ma + mb),
        BinOp::Sub => (a - b, ma + mb),
        BinOp::Mul => (a * b, ma * mb),
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            let q = a / b;
            (q, (ma + q.abs() * mb) / b.abs())
        }
        BinOp::Pow => {
            let r = float_pow(a, b)?;
            let rel_base = if a != 0.0 { b.abs() * ma / a.abs() } else { ma };
            let rel_exp = if a > 0.0 { a.ln().abs() * mb } else { 0.0 };
            (r, r.abs() * (1.0 + rel_base + rel_exp))
        }
    })
}

fn float_pow(a: f64, b: f64) -> Result<f64, EvalError> {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        if a == 0.0 && b < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(a.powi(b as i32));
    }
    if a > 0.0 {
        Ok((b * a.ln()).exp())
    } else if a == 0.0 && b > 0.0 {
        Ok(0.0)
    } else {
        Err(EvalError::DomainError(format!(
            "non-integer power {b} of non-positive base {a}"
        )))
    }
}

fn float_call(f: Func, (a, ma): (f64, f64)) -> Result<(f64, f64), EvalError> {
    Ok(match f {
        Func::Exp => {
            let r = a.exp();
            (r, r * (1.0 + ma))
        }
        Func::Log => {
            if a <= 0.0 {
                return Err(EvalError::DomainError(format!("log of non-positive {a}")));
            }
            let r = a.ln();
            (r, r.abs() + ma / a)
        }
        Func::Sin => (a.sin(), 1.0 + ma),
        Func::Cos => (a.cos(), 1.0 + ma),
        Func::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::DomainError(format!("sqrt of negative {a}")));
            }
            let r = a.sqrt();
            (r, r + if r > 0.0 { ma / (2.0 * r) } else { ma.sqrt() })
        }
    })
}

fn exact_binary(op: BinOp, a: &BigRational, b: &BigRational) -> Result<BigRational, EvalError> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            a / b
        }
        BinOp::Pow => {
            if !b.is_integer() {
                return Err(EvalError::ExactnessError(format!(
                    "non-integer power {b} in exact mode"
                )));
            }
            let n = b
                .to_integer()
                .to_i64()
                .filter(|n| n.abs() <= MAX_EXACT_EXPONENT)
                .ok_or_else(|| EvalError::ExactnessError(format!("exponent {b} too large")))?;
            if a.is_zero() && n < 0 {
                return Err(EvalError::DivisionByZero);
            }
            num_traits::pow::Pow::pow(a, n as i32)
        }
    })
}

fn exact_sqrt(q: &BigRational) -> Option<BigRational> {
    let root = |n: &BigInt| {
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    };
    Some(BigRational::new(root(q.numer())?, root(q.denom())?))
}

fn exact_call(f: Func, a: &BigRational) -> Result<BigRational, EvalError> {
    let inexact = || EvalError::ExactnessError(format!("{}({a})", f.name()));
    match f {
        Func::Exp if a.is_zero() => Ok(BigRational::one()),
        Func::Log if a.is_one() => Ok(BigRational::zero()),
        Func::Log if !a.is_positive() => {
            Err(EvalError::DomainError(format!("log of non-positive {a}")))
        }
        Func::Sin if a.is_zero() => Ok(BigRational::zero()),
        Func::Cos if a.is_zero() => Ok(BigRational::one()),
        Func::Sqrt if a.is_negative() => {
            Err(EvalError::DomainError(format!("sqrt of negative {a}")))
        }
        Func::Sqrt => exact_sqrt(a).ok_or_else(inexact),
        _ => Err(inexact()),
    }
}

/// Evaluate `e` with the given bindings.
pub fn evaluate(e: &Expr, env: &Bindings, mode: Mode) -> Result<Value, EvalError> {
    let tape = Tape::compile([e]);
    Ok(tape.eval(env, mode)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn q(n: i64) -> Value {
        Value::from(n)
    }

    #[test]
    fn exact_examples() {
        let e = parse("x^2 + y").unwrap();
        assert_eq!(evaluate(&e, &Bindings::xy(2, 3), Mode::Exact).unwrap(), q(7));

        let e = parse("1/(x-1)").unwrap();
        let env = Bindings::xy(1, 0);
        assert_eq!(evaluate(&e, &env, Mode::Exact), Err(EvalError::DivisionByZero));
        assert_eq!(evaluate(&e, &env, Mode::Float), Err(EvalError::DivisionByZero));

        let e = parse("exp(0) + log(1)").unwrap();
        assert_eq!(evaluate(&e, &Bindings::new(), Mode::Exact).unwrap(), q(1));
        let e = parse("sqrt(9/4) + sin(0) + cos(0)").unwrap();
        assert_eq!(
            evaluate(&e, &Bindings::new(), Mode::Exact).unwrap(),
            Value::Exact(BigRational::new(5.into(), 2.into()))
        );
    }

    #[test]
    fn exact_mode_errors() {
        let env = Bindings::xy(2, -1);
        assert!(matches!(
            evaluate(&parse("exp(x)").unwrap(), &env, Mode::Exact),
            Err(EvalError::ExactnessError(_))
        ));
        assert!(matches!(
            evaluate(&parse("x^(1/2)").unwrap(), &env, Mode::Exact),
            Err(EvalError::ExactnessError(_))
        ));
        assert!(matches!(
            evaluate(&parse("log(y)").unwrap(), &env, Mode::Exact),
            Err(EvalError::DomainError(_))
        ));
        assert!(matches!(
            evaluate(&parse("sqrt(y)").unwrap(), &env, Mode::Float),
            Err(EvalError::DomainError(_))
        ));
        assert!(matches!(
            evaluate(&parse("y^(1/2)").unwrap(), &env, Mode::Float),
            Err(EvalError::DomainError(_))
        ));
        assert_eq!(
            evaluate(&parse("x").unwrap(), &Bindings::new(), Mode::Float),
            Err(EvalError::UnboundVariable(Symbol::Var(Var::X)))
        );
        assert_eq!(
            evaluate(&Expr::w(2), &env, Mode::Exact),
            Err(EvalError::UnboundVariable(Symbol::W(2)))
        );
    }

    #[test]
    fn float_matches_exact_on_rational_input() {
        let e = parse("(x^3 - 2*x*y)/(y^2 + 1/3) - 7/5").unwrap();
        let env = Bindings::xy(BigRational::new(3.into(), 7.into()), BigRational::new((-5).into(), 4.into()));
        let exact = evaluate(&e, &env, Mode::Exact).unwrap().to_f64();
        let float = evaluate(&e, &env, Mode::Float).unwrap().to_f64();
        assert!((exact - float).abs() <= 1e-12 * exact.abs().max(1.0));
    }

    #[test]
    fn tape_shares_identical_subtrees() {
        let a = parse("(x + y)*(x + y)").unwrap();
        let tape = Tape::compile([&a]);
        // x, y, x + y, product
        assert_eq!(tape.len(), 4);
    }

    #[test]
    fn w_bindings() {
        let e = Expr::add(Expr::w(1), Expr::mul(Expr::x(), Expr::w(3)));
        let env = Bindings::xy(2, 0).with(Symbol::W(1), 1).with(Symbol::W(3), 5);
        assert_eq!(evaluate(&e, &env, Mode::Exact).unwrap(), q(11));
    }
}
