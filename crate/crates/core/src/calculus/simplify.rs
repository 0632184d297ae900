//! Canonical rational-function normal form.
//!
//! Rational operations over `x`, `y`, `W_k` and atoms are collected into a
//! reduced fraction of integer polynomials. Function calls and non-integer
//! powers become atoms after a small rewrite pass on their (recursively
//! simplified) arguments. Atoms are ordered by their printed form, so the
//! result does not depend on the order in which they were met.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{Mono, Poly};
use crate::expr::{BinOp, Expr, ExprKind, Func, Var, MAX_W_ORDER};

/// Terms allowed in any intermediate polynomial before giving up.
const MAX_TERMS: usize = 6000;
/// Largest integer exponent expanded algebraically.
const MAX_EXPANDED_POWER: u32 = 256;

const ATOM_BASE: usize = 3 + MAX_W_ORDER as usize;

fn w_index(k: u8) -> usize {
    2 + k as usize
}

#[derive(Debug)]
struct TooLarge;

/// Reduced fraction `num / den` with integer coefficients, coprime contents,
/// and a positive lex-leading coefficient in the denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub num: Poly,
    pub den: Poly,
    /// Atom `i` is polynomial variable `ATOM_BASE + i`.
    pub atoms: Vec<Expr>,
}

impl NormalForm {
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// True when no atom occurs, i.e. the value is a genuine rational function.
    pub fn is_rational(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_expr(&self) -> Expr {
        let num = render_poly(&self.num, &self.atoms);
        if self.den.is_one() {
            num
        } else {
            Expr::div(num, render_poly(&self.den, &self.atoms))
        }
    }
}

#[derive(Clone, Debug)]
struct Frac {
    num: Poly,
    den: Poly,
}

impl Frac {
    fn constant(q: BigRational) -> Frac {
        Frac {
            num: Poly::constant(q),
            den: Poly::one(),
        }
    }

    fn poly(p: Poly) -> Frac {
        Frac {
            num: p,
            den: Poly::one(),
        }
    }

    fn check(self) -> Result<Frac, TooLarge> {
        if self.num.len() > MAX_TERMS || self.den.len() > MAX_TERMS {
            Err(TooLarge)
        } else {
            Ok(self)
        }
    }

    /// Cancel the gcd and normalize.
    fn reduced(num: Poly, den: Poly) -> Result<Frac, TooLarge> {
        if num.len() > MAX_TERMS || den.len() > MAX_TERMS {
            return Err(TooLarge);
        }
        if num.is_zero() {
            return Ok(Frac::constant(BigRational::zero()));
        }
        let g = Poly::gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        Ok(normalize_scale(num, den))
    }

    fn neg(&self) -> Frac {
        Frac {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    fn add(&self, o: &Frac) -> Result<Frac, TooLarge> {
        if self.den == o.den {
            return Frac::reduced(self.num.add(&o.num), self.den.clone());
        }
        let g = Poly::gcd(&self.den, &o.den);
        let a_scale = o.den.exact_div(&g).expect("gcd divides");
        let b_scale = self.den.exact_div(&g).expect("gcd divides");
        let num = self.num.mul(&a_scale).add(&o.num.mul(&b_scale));
        let den = self.den.mul(&a_scale);
        Frac::reduced(num, den)
    }

    fn mul(&self, o: &Frac) -> Result<Frac, TooLarge> {
        if self.num.is_zero() || o.num.is_zero() {
            return Ok(Frac::constant(BigRational::zero()));
        }
        // cross-cancel keeps the operands small
        let g1 = Poly::gcd(&self.num, &o.den);
        let g2 = Poly::gcd(&o.num, &self.den);
        let n1 = self.num.exact_div(&g1).expect("gcd divides");
        let d2 = o.den.exact_div(&g1).expect("gcd divides");
        let n2 = o.num.exact_div(&g2).expect("gcd divides");
        let d1 = self.den.exact_div(&g2).expect("gcd divides");
        normalize_scale(n1.mul(&n2), d1.mul(&d2)).check()
    }

    fn recip(&self) -> Option<Frac> {
        if self.num.is_zero() {
            return None;
        }
        Some(normalize_scale(self.den.clone(), self.num.clone()))
    }

    fn powi(&self, n: i64) -> Result<Option<Frac>, TooLarge> {
        let base = if n < 0 {
            match self.recip() {
                Some(r) => r,
                None => return Ok(None),
            }
        } else {
            self.clone()
        };
        let e = n.unsigned_abs() as u32;
        Ok(Some(
            Frac {
                num: base.num.pow(e),
                den: base.den.pow(e),
            }
            .check()?,
        ))
    }
}

fn normalize_scale(num: Poly, den: Poly) -> Frac {
    let (dn, kd) = den.integer_normalized();
    let (nn, kn) = num.scale(&kd.recip()).integer_normalized();
    // value = kn * nn / dn with kn = p / q, q > 0
    let p = BigRational::from_integer(kn.numer().clone());
    let q = BigRational::from_integer(kn.denom().clone());
    Frac {
        num: nn.scale(&p),
        den: dn.scale(&q),
    }
}

struct Converter {
    atoms: Vec<Expr>,
    atom_ix: HashMap<Expr, usize>,
    memo: HashMap<usize, (Expr, Frac)>,
}

impl Converter {
    fn new() -> Converter {
        Converter {
            atoms: Vec::new(),
            atom_ix: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn atom(&mut self, e: Expr) -> Frac {
        let n = self.atoms.len();
        let ix = *self.atom_ix.entry(e.clone()).or_insert_with(|| n);
        if ix == n {
            self.atoms.push(e);
        }
        Frac::poly(Poly::var(ATOM_BASE + ix))
    }

    fn convert(&mut self, e: &Expr) -> Result<Frac, TooLarge> {
        if let Some((_, f)) = self.memo.get(&e.id()) {
            return Ok(f.clone());
        }
        let out = match e.kind() {
            ExprKind::Num(q) => Frac::constant(q.clone()),
            ExprKind::Var(Var::X) => Frac::poly(Poly::var(0)),
            ExprKind::Var(Var::Y) => Frac::poly(Poly::var(1)),
            ExprKind::W(k) => Frac::poly(Poly::var(w_index(*k))),
            ExprKind::Neg(a) => self.convert(a)?.neg(),
            ExprKind::Binary(op, a, b) => match op {
                BinOp::Add => self.convert(a)?.add(&self.convert(b)?)?,
                BinOp::Sub => self.convert(a)?.add(&self.convert(b)?.neg())?,
                BinOp::Mul => self.convert(a)?.mul(&self.convert(b)?)?,
                BinOp::Div => {
                    let fa = self.convert(a)?;
                    match self.convert(b)?.recip() {
                        Some(r) => fa.mul(&r)?,
                        // identically zero divisor: keep the quotient opaque
                        None => self.atom(e.clone()),
                    }
                }
                BinOp::Pow => self.convert_pow(e, a, b)?,
            },
            ExprKind::Call(f, a) => {
                let r = rewrite_call(*f, &simplify(a));
                if is_atomic(&r) {
                    self.atom(r)
                } else {
                    self.convert(&r)?
                }
            }
        };
        // the key expression is kept alive so its address is not reused
        self.memo.insert(e.id(), (e.clone(), out.clone()));
        Ok(out)
    }

    fn convert_pow(&mut self, e: &Expr, a: &Expr, b: &Expr) -> Result<Frac, TooLarge> {
        let exponent = match b.as_integer().and_then(|n| n.to_i64()) {
            Some(n) => Some(n),
            None => {
                let bs = simplify(b);
                bs.as_integer().and_then(|n| n.to_i64())
            }
        };
        match exponent {
            Some(n) if n.unsigned_abs() <= MAX_EXPANDED_POWER as u64 => {
                match self.convert(a)?.powi(n)? {
                    Some(f) => Ok(f),
                    None => Ok(self.atom(e.clone())),
                }
            }
            _ => {
                let r = Expr::pow(simplify(a), simplify(b));
                Ok(self.atom(r))
            }
        }
    }
}

fn is_atomic(e: &Expr) -> bool {
    match e.kind() {
        ExprKind::Call(..) => true,
        ExprKind::Binary(BinOp::Pow, _, n) => n.as_integer().is_none(),
        _ => false,
    }
}

/// Rewrite rules applied to a call with an already simplified argument.
fn rewrite_call(f: Func, arg: &Expr) -> Expr {
    match (f, arg.kind()) {
        (Func::Exp, ExprKind::Call(Func::Log, u)) => return u.clone(),
        (Func::Log, ExprKind::Call(Func::Exp, u)) => return u.clone(),
        _ => {}
    }
    if let Some(q) = arg.as_num() {
        match f {
            Func::Exp if q.is_zero() => return Expr::one(),
            Func::Log if q.is_one() => return Expr::zero(),
            Func::Sin if q.is_zero() => return Expr::zero(),
            Func::Cos if q.is_zero() => return Expr::one(),
            Func::Sqrt if !q.is_negative() => {
                let root = |n: &BigInt| {
                    let r = n.sqrt();
                    (&r * &r == *n).then_some(r)
                };
                if let (Some(n), Some(d)) = (root(q.numer()), root(q.denom())) {
                    return Expr::num(BigRational::new(n, d));
                }
            }
            _ => {}
        }
    }
    Expr::call(f, arg.clone())
}

fn render_poly(p: &Poly, atoms: &[Expr]) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms: Vec<(&Mono, &BigRational)> = p.terms().collect();
    // graded order, highest first; lex breaks ties
    terms.sort_by(|(m1, _), (m2, _)| m2.degree().cmp(&m1.degree()).then_with(|| m2.cmp(m1)));
    let mut acc: Option<Expr> = None;
    for (m, c) in terms {
        let mono = render_mono(m, atoms);
        let mag = c.abs();
        let term = match mono {
            None => Expr::num(mag),
            Some(m) if mag.is_one() => m,
            Some(m) => Expr::mul(Expr::num(mag), m),
        };
        acc = Some(match acc {
            None if c.is_negative() => Expr::neg(term),
            None => term,
            Some(a) if c.is_negative() => Expr::sub(a, term),
            Some(a) => Expr::add(a, term),
        });
    }
    acc.expect("nonzero polynomial has terms")
}

fn render_mono(m: &Mono, atoms: &[Expr]) -> Option<Expr> {
    let mut acc: Option<Expr> = None;
    for (i, &e) in m.exponents().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let base = match i {
            0 => Expr::x(),
            1 => Expr::y(),
            i if i < ATOM_BASE => Expr::w((i - 2) as u8),
            i => atoms[i - ATOM_BASE].clone(),
        };
        let factor = if e == 1 {
            base
        } else {
            Expr::pow(base, Expr::int(e as i64))
        };
        acc = Some(match acc {
            None => factor,
            Some(a) => Expr::mul(a, factor),
        });
    }
    acc
}

/// Normal form of `e`, or `None` when an intermediate polynomial grows past
/// the term budget.
pub fn normal_form(e: &Expr) -> Option<NormalForm> {
    let mut conv = Converter::new();
    let frac = conv.convert(e).ok()?;
    // renumber atoms by printed form
    let mut order: Vec<usize> = (0..conv.atoms.len()).collect();
    let keys: Vec<String> = conv.atoms.iter().map(|a| a.to_string()).collect();
    order.sort_by(|&i, &j| keys[i].cmp(&keys[j]));
    let mut perm: Vec<usize> = (0..ATOM_BASE + conv.atoms.len()).collect();
    for (new, &old) in order.iter().enumerate() {
        perm[ATOM_BASE + old] = ATOM_BASE + new;
    }
    let atoms: Vec<Expr> = order.iter().map(|&i| conv.atoms[i].clone()).collect();
    let frac = normalize_scale(frac.num.permuted(&perm), frac.den.permuted(&perm));
    Some(NormalForm {
        num: frac.num,
        den: frac.den,
        atoms,
    })
}

/// Bring `e` to canonical rational-function form. Expressions whose normal
/// form exceeds the size budget are returned unchanged.
pub fn simplify(e: &Expr) -> Expr {
    match normal_form(e) {
        Some(nf) => nf.to_expr(),
        None => e.clone(),
    }
}
