//! Immutable expression trees over the plane coordinates `x`, `y`, rational
//! literals, elementary functions, and the `W_k` indeterminates that stand for
//! derivatives of the unknown one-variable function `w` composed with the web
//! function.
//!
//! Nodes are reference counted so derived expressions share structure; the
//! structural hash is computed once at construction.

mod eval;
mod format;
mod parse;

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use eval::{evaluate, slot, Bindings, EvalError, Mode, Tape, Value, SLOTS};
pub use parse::{parse, ParseError};

/// Largest W-indeterminate order the engine will produce.
pub const MAX_W_ORDER: u8 = 6;

/// Plane coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

/// Anything that can be substituted or bound: a coordinate or `W_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Var(Var),
    W(u8),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Var(v) => f.write_str(v.name()),
            Symbol::W(k) => write!(f, "W{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Num(BigRational),
    Var(Var),
    /// `W_k`, the k-th derivative of `w` evaluated at the web function.
    W(u8),
    Neg(Expr),
    Binary(BinOp, Expr, Expr),
    Call(Func, Expr),
}

#[derive(Debug)]
struct Node {
    kind: ExprKind,
    hash: u64,
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn make(kind: ExprKind) -> Expr {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        kind.hash(&mut h);
        Expr(Arc::new(Node {
            kind,
            hash: h.finish(),
        }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Address of the shared node, stable for the lifetime of `self`.
    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn num(q: BigRational) -> Expr {
        Expr::make(ExprKind::Num(q))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: Var) -> Expr {
        Expr::make(ExprKind::Var(v))
    }

    pub fn x() -> Expr {
        Expr::var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::var(Var::Y)
    }

    /// `W_k`. Panics if `k` exceeds [`MAX_W_ORDER`].
    pub fn w(k: u8) -> Expr {
        assert!(k <= MAX_W_ORDER, "W order {k} exceeds {MAX_W_ORDER}");
        Expr::make(ExprKind::W(k))
    }

    pub fn symbol(s: Symbol) -> Expr {
        match s {
            Symbol::Var(v) => Expr::var(v),
            Symbol::W(k) => Expr::w(k),
        }
    }

    /// Negation. A literal operand is folded into a negative literal.
    pub fn neg(e: Expr) -> Expr {
        if let ExprKind::Num(q) = e.kind() {
            return Expr::num(-q);
        }
        Expr::make(ExprKind::Neg(e))
    }

    /// Binary node. When both operands are literals and the result is exact
    /// and finite, the node is folded into a literal; otherwise it is kept as
    /// written (no identity simplification, so `0 + x` stays `0 + x`).
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        if let (ExprKind::Num(p), ExprKind::Num(q)) = (a.kind(), b.kind()) {
            if let Some(r) = fold_literals(op, p, q) {
                return Expr::num(r);
            }
        }
        Expr::make(ExprKind::Binary(op, a, b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn powi(a: Expr, n: i64) -> Expr {
        Expr::pow(a, Expr::int(n))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::make(ExprKind::Call(f, a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, a)
    }

    pub fn log(a: Expr) -> Expr {
        Expr::call(Func::Log, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::call(Func::Cos, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::call(Func::Sqrt, a)
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.kind() {
            ExprKind::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_literal_zero(&self) -> bool {
        self.as_num().is_some_and(|q| q.is_zero())
    }

    pub fn is_literal_one(&self) -> bool {
        self.as_num().is_some_and(|q| q.is_one())
    }

    /// Literal integer value, if this is an integer literal.
    pub fn as_integer(&self) -> Option<&BigInt> {
        self.as_num().filter(|q| q.is_integer()).map(|q| q.numer())
    }

    /// Children in left-to-right order.
    pub fn children(&self) -> Vec<&Expr> {
        match self.kind() {
            ExprKind::Num(_) | ExprKind::Var(_) | ExprKind::W(_) => vec![],
            ExprKind::Neg(a) | ExprKind::Call(_, a) => vec![a],
            ExprKind::Binary(_, a, b) => vec![a, b],
        }
    }

    /// Number of distinct shared nodes.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if seen.insert(e.id()) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }

    /// True if any node satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            if pred(e) {
                return true;
            }
            stack.extend(e.children());
        }
        false
    }

    pub fn contains_w(&self) -> bool {
        self.any(&|e| matches!(e.kind(), ExprKind::W(_)))
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.any(&|e| matches!(e.kind(), ExprKind::Var(u) if *u == v))
    }

    /// Highest `W_k` order present.
    pub fn max_w_order(&self) -> Option<u8> {
        let mut best = None;
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            if let ExprKind::W(k) = e.kind() {
                best = best.max(Some(*k));
            }
            stack.extend(e.children());
        }
        best
    }

    /// Rational-operation tree: no function calls and every power has an
    /// integer literal exponent.
    pub fn is_rational(&self) -> bool {
        !self.any(&|e| match e.kind() {
            ExprKind::Call(..) => true,
            ExprKind::Binary(BinOp::Pow, _, n) => n.as_integer().is_none(),
            _ => false,
        })
    }
}

fn fold_literals(op: BinOp, p: &BigRational, q: &BigRational) -> Option<BigRational> {
    match op {
        BinOp::Add => Some(p + q),
        BinOp::Sub => Some(p - q),
        BinOp::Mul => Some(p * q),
        BinOp::Div => (!q.is_zero()).then(|| p / q),
        BinOp::Pow => {
            if !q.is_integer() {
                return None;
            }
            let n = q.to_integer().to_i32().filter(|n| n.abs() <= 64)?;
            if p.is_zero() && n < 0 {
                return None;
            }
            Some(num_traits::pow::Pow::pow(p, n))
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", format::format(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format::format(self))
    }
}

/// Render an expression in the input grammar.
pub fn format(e: &Expr) -> String {
    format::format(e)
}

/// Replace every occurrence of `target` by `replacement`.
pub fn substitute(e: &Expr, target: Symbol, replacement: &Expr) -> Expr {
    substitute_all(e, &[(target, replacement.clone())])
}

/// Simultaneous substitution of several symbols.
pub fn substitute_all(e: &Expr, map: &[(Symbol, Expr)]) -> Expr {
    fn go(e: &Expr, map: &[(Symbol, Expr)], memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(r) = memo.get(&e.id()) {
            return r.clone();
        }
        let out = match e.kind() {
            ExprKind::Num(_) => e.clone(),
            ExprKind::Var(v) => lookup(map, Symbol::Var(*v)).unwrap_or_else(|| e.clone()),
            ExprKind::W(k) => lookup(map, Symbol::W(*k)).unwrap_or_else(|| e.clone()),
            ExprKind::Neg(a) => {
                let a2 = go(a, map, memo);
                if a2.ptr_eq(a) {
                    e.clone()
                } else {
                    Expr::neg(a2)
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (a2, b2) = (go(a, map, memo), go(b, map, memo));
                if a2.ptr_eq(a) && b2.ptr_eq(b) {
                    e.clone()
                } else {
                    Expr::binary(*op, a2, b2)
                }
            }
            ExprKind::Call(f, a) => {
                let a2 = go(a, map, memo);
                if a2.ptr_eq(a) {
                    e.clone()
                } else {
                    Expr::call(*f, a2)
                }
            }
        };
        memo.insert(e.id(), out.clone());
        out
    }
    fn lookup(map: &[(Symbol, Expr)], s: Symbol) -> Option<Expr> {
        map.iter().find(|(t, _)| *t == s).map(|(_, r)| r.clone())
    }
    go(e, map, &mut HashMap::new())
}

// Operator overloads fold the additive and multiplicative identities. They are
// what the derivative and elimination code builds with, which keeps derived
// trees from filling up with `0*u` and `1*u` nodes.

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        if self.is_literal_zero() {
            return rhs;
        }
        if rhs.is_literal_zero() {
            return self;
        }
        if let ExprKind::Neg(r) = rhs.kind() {
            return Expr::sub(self, r.clone());
        }
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        if rhs.is_literal_zero() {
            return self;
        }
        if self.is_literal_zero() {
            return -rhs;
        }
        if self == rhs {
            return Expr::zero();
        }
        if let ExprKind::Neg(r) = rhs.kind() {
            return Expr::add(self, r.clone());
        }
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        if self.is_literal_zero() || rhs.is_literal_zero() {
            return Expr::zero();
        }
        if self.is_literal_one() {
            return rhs;
        }
        if rhs.is_literal_one() {
            return self;
        }
        if self.as_num().is_some_and(|q| (-q).is_one()) {
            return -rhs;
        }
        if rhs.as_num().is_some_and(|q| (-q).is_one()) {
            return -self;
        }
        match (self.kind(), rhs.kind()) {
            (ExprKind::Neg(a), ExprKind::Neg(b)) => Expr::mul(a.clone(), b.clone()),
            (ExprKind::Neg(a), _) => -Expr::mul(a.clone(), rhs),
            (_, ExprKind::Neg(b)) => -Expr::mul(self, b.clone()),
            _ => Expr::mul(self, rhs),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        if self.is_literal_zero() && !rhs.is_literal_zero() {
            return Expr::zero();
        }
        if rhs.is_literal_one() {
            return self;
        }
        if self == rhs && !rhs.is_literal_zero() {
            return Expr::one();
        }
        match (self.kind(), rhs.kind()) {
            (ExprKind::Neg(a), ExprKind::Neg(b)) => Expr::div(a.clone(), b.clone()),
            (ExprKind::Neg(a), _) => -Expr::div(a.clone(), rhs),
            (_, ExprKind::Neg(b)) => -Expr::div(self, b.clone()),
            _ => Expr::div(self, rhs),
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if self.is_literal_zero() {
            return self;
        }
        if let ExprKind::Neg(a) = self.kind() {
            return a.clone();
        }
        Expr::neg(self)
    }
}

impl Expr {
    /// `self^n` folding `n = 0` and `n = 1`.
    pub fn pown(self, n: i64) -> Expr {
        match n {
            0 => Expr::one(),
            1 => self,
            _ => Expr::powi(self, n),
        }
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

/// Convert a finite `f64` to the exact rational with the same value.
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

/// Nearest `f64` to a rational.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Numerator or denominator too large for a direct conversion.
        let shift = (q.numer().bits().max(q.denom().bits()) as i64 - 1000).max(0);
        let n = (q.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
        let d = (q.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
        if d == 0.0 {
            if q.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            n / d
        }
    })
}
