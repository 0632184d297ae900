//! Pointwise form of the constraint rows.
//!
//! The rank procedure only needs the values of the rows at the sample
//! points, together with enough derivatives to apply `δ` and the
//! prolongation. Every coefficient is carried as a truncated Taylor series
//! at each point, built from the jets of `f` and `b`; each derivative costs
//! one order. Symbolic rows of the same system are produced by
//! [`super::derive_generic_system`] and agree with these values.
//!
//! Exact mode computes modulo the prime `2^61 - 1`. Vanishing and rank
//! modulo the prime agree with those over the rationals except at points
//! where some nonzero rational numerator is divisible by the prime.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::WebSpec;
use crate::calculus::Sampler;
use crate::expr::{Expr, Func, Var, MAX_W_ORDER};
use crate::jets::{series_at, JetError, JetScalar, Series};

const PRIME: u64 = (1 << 61) - 1;
const POISON: u64 = u64::MAX;
const WIDTH: usize = MAX_W_ORDER as usize + 1;

/// Relative pivot threshold of the float rank.
const FLOAT_RANK_TOL: f64 = 1e-7;

/// A float value counts as zero when it is below this many rounding units
/// of its magnitude bound; the bound already sums the absolute values of
/// all contributing terms.
const ROUNDING_SLACK: f64 = 1024.0;

/// Residue modulo `2^61 - 1`. A rational whose denominator is divisible by
/// the prime maps to a poison value that absorbs all arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Fp(u64);

impl Fp {
    fn reduce(v: u128) -> Fp {
        Fp((v % PRIME as u128) as u64)
    }

    fn poisoned(self, o: Fp) -> bool {
        self.0 == POISON || o.0 == POISON
    }

    fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = Fp(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn inv(self) -> Fp {
        if self.0 == 0 || self.0 == POISON {
            return Fp(POISON);
        }
        self.pow(PRIME - 2)
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, o: Fp) -> Fp {
        if self.poisoned(o) {
            return Fp(POISON);
        }
        Fp::reduce(self.0 as u128 + o.0 as u128)
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        match self.0 {
            0 | POISON => self,
            v => Fp(PRIME - v),
        }
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, o: Fp) -> Fp {
        self + (-o)
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, o: Fp) -> Fp {
        if self.poisoned(o) {
            return Fp(POISON);
        }
        Fp::reduce(self.0 as u128 * o.0 as u128)
    }
}

impl Div for Fp {
    type Output = Fp;
    fn div(self, o: Fp) -> Fp {
        self * o.inv()
    }
}

fn residue(n: &BigInt) -> u64 {
    n.mod_floor(&BigInt::from(PRIME))
        .to_u64()
        .expect("residue fits in u64")
}

impl JetScalar for Fp {
    fn from_rational(q: &BigRational) -> Fp {
        Fp(residue(q.numer())) / Fp(residue(q.denom()))
    }

    fn from_int(n: i64) -> Fp {
        Fp(n.rem_euclid(PRIME as i64) as u64)
    }

    fn is_zero_value(&self) -> bool {
        self.0 == 0
    }

    fn is_finite_value(&self) -> bool {
        self.0 != POISON
    }

    fn taylor(f: Func, _u0: &Fp, _m: usize) -> Result<Vec<Fp>, JetError> {
        Err(JetError::Exactness(format!("{} modulo a prime", f.name())))
    }
}

/// Float with a running bound on the magnitude of the terms that produced
/// it; cancellation shows as `|v|` far below `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Scaled {
    pub v: f64,
    pub m: f64,
}

impl Scaled {
    fn exact(v: f64) -> Scaled {
        Scaled { v, m: v.abs() }
    }
}

impl Add for Scaled {
    type Output = Scaled;
    fn add(self, o: Scaled) -> Scaled {
        Scaled {
            v: self.v + o.v,
            m: self.m + o.m,
        }
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, o: Scaled) -> Scaled {
        Scaled {
            v: self.v - o.v,
            m: self.m + o.m,
        }
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            v: -self.v,
            m: self.m,
        }
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, o: Scaled) -> Scaled {
        Scaled {
            v: self.v * o.v,
            m: self.m * o.m,
        }
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, o: Scaled) -> Scaled {
        let v = self.v / o.v;
        Scaled {
            v,
            m: (self.m + v.abs() * o.m) / o.v.abs(),
        }
    }
}

impl JetScalar for Scaled {
    fn from_rational(q: &BigRational) -> Scaled {
        Scaled::exact(f64::from_rational(q))
    }

    fn from_int(n: i64) -> Scaled {
        Scaled::exact(n as f64)
    }

    fn is_zero_value(&self) -> bool {
        self.v == 0.0
    }

    fn is_finite_value(&self) -> bool {
        self.v.is_finite() && self.m.is_finite()
    }

    fn taylor(f: Func, u0: &Scaled, m: usize) -> Result<Vec<Scaled>, JetError> {
        Ok(f64::taylor(f, &u0.v, m)?.into_iter().map(Scaled::exact).collect())
    }
}

/// Scalar field of one evaluation track.
pub(crate) trait Track: JetScalar + Copy {
    /// Exact tracks take the largest rank over the points, float tracks
    /// the median.
    const EXACT: bool;
    /// Rank of the first `cols` columns; float entries at rounding level
    /// count as zero.
    fn rank(rows: Vec<Vec<Self>>, cols: usize) -> usize;
    fn nonzero(self) -> bool;
}

impl Track for Fp {
    const EXACT: bool = true;

    fn rank(m: Vec<Vec<Fp>>, cols: usize) -> usize {
        fp_rank(m, cols)
    }

    fn nonzero(self) -> bool {
        self.0 != 0
    }
}

impl Track for Scaled {
    const EXACT: bool = false;

    fn rank(m: Vec<Vec<Scaled>>, cols: usize) -> usize {
        let cleaned = m
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| if e.nonzero() { e.v } else { 0.0 })
                    .collect()
            })
            .collect();
        float_rank(cleaned, cols)
    }

    fn nonzero(self) -> bool {
        self.v.abs() > ROUNDING_SLACK * f64::EPSILON * self.m
    }
}

pub(crate) fn fp_rank(mut m: Vec<Vec<Fp>>, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][c].0 != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][c].inv();
        for r in rank + 1..m.len() {
            if m[r][c].0 == 0 {
                continue;
            }
            let factor = m[r][c] * inv;
            for k in c..cols {
                let t = factor * m[rank][k];
                m[r][k] = m[r][k] - t;
            }
        }
        rank += 1;
    }
    rank
}

/// Rank with full pivoting after scaling each row to unit max norm.
pub(crate) fn float_rank(mut m: Vec<Vec<f64>>, cols: usize) -> usize {
    for row in m.iter_mut() {
        let scale = row[..cols].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            row.iter_mut().for_each(|v| *v /= scale);
        }
    }
    let mut rank = 0;
    let mut used = vec![false; cols];
    while rank < m.len() {
        let mut best = (0.0, 0, 0);
        for (r, row) in m.iter().enumerate().skip(rank) {
            for (c, v) in row[..cols].iter().enumerate() {
                if !used[c] && v.abs() > best.0 {
                    best = (v.abs(), r, c);
                }
            }
        }
        if best.0 <= FLOAT_RANK_TOL {
            break;
        }
        let (_, pr, pc) = best;
        m.swap(rank, pr);
        used[pc] = true;
        let lead = m[rank][pc];
        for r in rank + 1..m.len() {
            let factor = m[r][pc] / lead;
            if factor != 0.0 {
                for k in 0..cols {
                    m[r][k] -= factor * m[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LocalError {
    /// A derivative was requested of an order-0 series.
    Exhausted,
    /// Differentiation would produce a `W` above the supported order.
    Overflow,
    /// The track cannot represent the input (transcendental data in exact
    /// mode).
    Unrepresentable(String),
}

/// `c0 + Σ c_k W_k` at one point; `None` is a structural zero.
#[derive(Clone, Debug)]
pub(crate) struct JetRow<T> {
    coeffs: [Option<Series<T>>; WIDTH],
}

fn combine<T: JetScalar>(a: Option<Series<T>>, b: Series<T>) -> Option<Series<T>> {
    Some(match a {
        Some(a) => a.add(&b),
        None => b,
    })
}

impl<T: Track> JetRow<T> {
    fn empty() -> JetRow<T> {
        JetRow {
            coeffs: std::array::from_fn(|_| None),
        }
    }

    fn affine(c0: Series<T>, c1: Series<T>) -> JetRow<T> {
        let mut r = JetRow::empty();
        r.coeffs[0] = Some(c0);
        r.coeffs[1] = Some(c1);
        r
    }

    fn scalar(c: Series<T>) -> JetRow<T> {
        let mut r = JetRow::empty();
        r.coeffs[0] = Some(c);
        r
    }

    pub(crate) fn value(&self, k: usize) -> T {
        match &self.coeffs[k] {
            Some(s) => *s.value(),
            None => T::from_int(0),
        }
    }

    fn order(&self) -> usize {
        self.coeffs.iter().flatten().map(|s| s.order()).min().unwrap_or(usize::MAX)
    }

    fn map(&self, f: impl Fn(&Series<T>) -> Series<T>) -> JetRow<T> {
        JetRow {
            coeffs: std::array::from_fn(|k| self.coeffs[k].as_ref().map(&f)),
        }
    }

    fn scale(&self, s: &Series<T>) -> JetRow<T> {
        self.map(|c| c.mul(s))
    }

    fn neg(&self) -> JetRow<T> {
        self.map(|c| c.neg())
    }

    fn sub(&self, o: &JetRow<T>) -> JetRow<T> {
        let mut out = self.clone();
        for (k, c) in o.coeffs.iter().enumerate() {
            if let Some(c) = c {
                out.coeffs[k] = combine(out.coeffs[k].take(), c.neg());
            }
        }
        out
    }

    /// `∂v`, with `∂v W_k = W_{k+1} f_v`.
    fn partial(&self, var: Var, fv: &Series<T>) -> Result<JetRow<T>, LocalError> {
        if self.coeffs[WIDTH - 1].is_some() {
            return Err(LocalError::Overflow);
        }
        if self.order() == 0 {
            return Err(LocalError::Exhausted);
        }
        let mut out = JetRow::empty();
        for (k, c) in self.coeffs.iter().enumerate() {
            let Some(c) = c else { continue };
            out.coeffs[k] = combine(out.coeffs[k].take(), c.partial(var));
            if k >= 1 {
                out.coeffs[k + 1] = combine(out.coeffs[k + 1].take(), c.mul(fv));
            }
        }
        Ok(out)
    }
}

/// The web frame at one point.
struct PointFrame<T> {
    fx: Series<T>,
    fy: Series<T>,
    neg_inv_fx: Series<T>,
    neg_inv_fy: Series<T>,
}

impl<T: Track> PointFrame<T> {
    fn new(f: &Series<T>) -> Result<PointFrame<T>, JetError> {
        let fx = f.partial(Var::X);
        let fy = f.partial(Var::Y);
        let minus_one = Series::constant(T::from_int(-1), f.order());
        Ok(PointFrame {
            neg_inv_fx: minus_one.div(&fx)?,
            neg_inv_fy: minus_one.div(&fy)?,
            fx,
            fy,
        })
    }

    fn d1(&self, r: &JetRow<T>) -> Result<JetRow<T>, LocalError> {
        Ok(r.partial(Var::X, &self.fx)?.scale(&self.neg_inv_fx))
    }

    fn d2(&self, r: &JetRow<T>) -> Result<JetRow<T>, LocalError> {
        Ok(r.partial(Var::Y, &self.fy)?.scale(&self.neg_inv_fy))
    }

    fn delta(&self, r: &JetRow<T>) -> Result<JetRow<T>, LocalError> {
        Ok(self.d1(r)?.sub(&self.d2(r)?))
    }

    fn prolong(&self, r: &JetRow<T>) -> Result<JetRow<T>, LocalError> {
        Ok(self.d1(r)?.neg())
    }
}

/// Which elimination produced the rows.
#[derive(Clone, Debug)]
pub(crate) enum Elimination {
    /// `J1, J2`, expected order 4.
    Generic,
    /// `∂x∂y (Q / p2)`, expected order 3.
    Singular { p2: Expr },
}

impl Elimination {
    pub(crate) fn expected_order(&self) -> usize {
        match self {
            Elimination::Generic => 4,
            Elimination::Singular { .. } => 3,
        }
    }
}

struct PointState<T> {
    frame: PointFrame<T>,
    rows: Vec<JetRow<T>>,
}

/// Conditions on `w` at every usable sample point; rows are monic in their
/// lead order.
pub(crate) struct LocalSystem<T> {
    points: Vec<Option<PointState<T>>>,
    /// Lead order of each row; 0 if the row has no `W` left.
    pub leads: Vec<usize>,
}

/// Failure while building the rows at one point.
enum PointError {
    Jet(JetError),
    Local(LocalError),
}

impl From<JetError> for PointError {
    fn from(e: JetError) -> PointError {
        PointError::Jet(e)
    }
}

impl From<LocalError> for PointError {
    fn from(e: LocalError) -> PointError {
        PointError::Local(e)
    }
}

/// Unrepresentable data sinks the whole track; poles and domain errors
/// only drop the point.
fn at_point<V>(r: Result<V, PointError>) -> Result<Option<V>, LocalError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(PointError::Jet(JetError::Exactness(m))) => Err(LocalError::Unrepresentable(m)),
        Err(PointError::Jet(_)) => Ok(None),
        Err(PointError::Local(e)) => Err(e),
    }
}

struct PointInput<T> {
    f: Series<T>,
    b: Series<T>,
    p2: Option<Series<T>>,
}

fn point_state<T: Track>(input: &PointInput<T>) -> Result<(PointFrame<T>, Vec<JetRow<T>>), PointError> {
    let PointInput { f, b, p2 } = input;
    let frame = PointFrame::new(f)?;
    let (fx, fy) = (&frame.fx, &frame.fy);
    let fxx = fx.partial(Var::X);
    let fxy = fx.partial(Var::Y);
    let fyy = fy.partial(Var::Y);
    let bx = b.partial(Var::X);
    let one = Series::constant(T::from_int(1), f.order());
    // Q = f_y (b f_xx / f_x² + f_yy / f_y² - 2 b H - b_x / f_x - (b - 1) W1)
    let t1 = b.mul(&fxx).div(&fx.mul(fx))?;
    let t2 = fyy.div(&fy.mul(fy))?;
    let t3 = b.mul(&fxy).div(&fx.mul(fy))?.scale(&T::from_int(2));
    let t4 = bx.div(fx)?;
    let q0 = fy.mul(&t1.add(&t2).sub(&t3).sub(&t4));
    let q1 = fy.mul(&b.sub(&one)).neg();
    let q = JetRow::affine(q0, q1);
    let rows = match p2 {
        None => {
            let p = b.mul(fy).div(fx)?;
            let (px, py) = (p.partial(Var::X), p.partial(Var::Y));
            let pxy = px.partial(Var::Y);
            let inv_delta = one.div(&px.mul(&py).sub(&p.mul(&pxy)))?;
            let qx = q.partial(Var::X, fx)?;
            let qxy = qx.partial(Var::Y, fy)?;
            let e1 = qx.scale(&py).sub(&qxy.scale(&p)).scale(&inv_delta);
            let e2 = qxy.scale(&px).sub(&qx.scale(&pxy)).scale(&inv_delta);
            let j1 = e1.partial(Var::Y, fy)?;
            let j2 = e2.sub(&e1.partial(Var::X, fx)?);
            vec![j1, j2]
        }
        Some(p2) => {
            let g = q.scale(&one.div(p2)?);
            vec![g.partial(Var::X, fx)?.partial(Var::Y, fy)?]
        }
    };
    Ok((frame, rows))
}

impl<T: Track> LocalSystem<T> {
    /// Rows at every sample point from jets of order `jet_order`. Lead
    /// orders are decided here unless `leads` fixes them (so that a second
    /// track follows the decisions of the first).
    pub(crate) fn build(
        spec: &WebSpec,
        elimination: &Elimination,
        sampler: &Sampler,
        jet_order: usize,
        leads: Option<&[usize]>,
    ) -> Result<LocalSystem<T>, LocalError> {
        let mut raw: Vec<Option<(PointFrame<T>, Vec<JetRow<T>>)>> = Vec::new();
        for pt in sampler.points() {
            let (Some(x), Some(y)) = (pt.exact[0].as_ref(), pt.exact[1].as_ref()) else {
                raw.push(None);
                continue;
            };
            let at = (T::from_rational(x), T::from_rational(y));
            let jets = |e: &Expr| series_at(e, at, jet_order).map_err(PointError::from);
            let input = (|| -> Result<PointInput<T>, PointError> {
                Ok(PointInput {
                    f: jets(&spec.f)?,
                    b: jets(&spec.b)?,
                    p2: match elimination {
                        Elimination::Generic => None,
                        Elimination::Singular { p2 } => Some(jets(p2)?),
                    },
                })
            })();
            let state = match at_point(input)? {
                Some(input) => at_point(point_state(&input))?,
                None => None,
            };
            raw.push(state);
        }
        let nrows = raw.iter().flatten().map(|(_, r)| r.len()).next().unwrap_or(0);
        let expected = elimination.expected_order();
        let leads: Vec<usize> = match leads {
            Some(l) => l.to_vec(),
            None => (0..nrows)
                .map(|i| {
                    (1..=expected)
                        .rev()
                        .find(|&k| {
                            raw.iter()
                                .flatten()
                                .any(|(_, rows)| rows[i].value(k).nonzero())
                        })
                        .unwrap_or(0)
                })
                .collect(),
        };
        let points = raw
            .into_iter()
            .map(|p| {
                let (frame, rows) = p?;
                let rows = rows
                    .iter()
                    .zip(&leads)
                    .map(|(row, &k)| normalize(row, k))
                    .collect::<Option<Vec<_>>>()?;
                Some(PointState { frame, rows })
            })
            .collect();
        Ok(LocalSystem { points, leads })
    }

    pub(crate) fn order(&self) -> usize {
        self.leads.iter().copied().max().unwrap_or(0)
    }

    pub(crate) fn usable_points(&self) -> usize {
        self.points.iter().flatten().count()
    }

    /// Per-point values `(a, b)` of each maximality condition `a = b`:
    /// `K_i = L_i` and `δ(K_i) = 0` (as `∂1 K_i = ∂2 K_i`) on the generic
    /// branch, `δ(R_i) = 0` on the singular branch, `i` descending.
    pub(crate) fn conditions(
        &self,
        elimination: &Elimination,
    ) -> Result<Vec<(String, Vec<Option<(T, T)>>)>, LocalError> {
        let mut out = Vec::new();
        let top = elimination.expected_order();
        let (main, main_name) = match elimination {
            Elimination::Generic => (0, "K"),
            Elimination::Singular { .. } => (0, "R"),
        };
        if matches!(elimination, Elimination::Generic) {
            for i in (0..top).rev() {
                let vals = self
                    .points
                    .iter()
                    .map(|p| p.as_ref().map(|p| (p.rows[0].value(i), p.rows[1].value(i))))
                    .collect();
                out.push((format!("K{i} - L{i}"), vals));
            }
        }
        for i in (0..top).rev() {
            let mut vals = Vec::with_capacity(self.points.len());
            for p in &self.points {
                let Some(p) = p else {
                    vals.push(None);
                    continue;
                };
                let c = match &p.rows[main].coeffs[i] {
                    Some(c) => c.clone(),
                    None => Series::constant(T::from_int(0), 1),
                };
                let c = JetRow::scalar(c);
                let a = p.frame.d1(&c)?.value(0);
                let b = p.frame.d2(&c)?.value(0);
                vals.push(Some((a, b)));
            }
            out.push((format!("delta({main_name}{i})"), vals));
        }
        Ok(out)
    }

    /// Dimension of the solution space in `w`, see [`super::w_dimension`].
    pub(crate) fn w_dimension(&self, max_iterations: usize) -> Result<Prolongation, LocalError> {
        let m = self.order();
        let npoints = self.points.len();
        if m == 0 {
            let contradiction = self.points.iter().flatten().any(|p| {
                p.rows.iter().any(|r| r.value(0).nonzero())
            });
            return Ok(Prolongation {
                dim: if contradiction { Some(-1) } else { None },
                iterations: 0,
                stabilized: true,
                reason: (!contradiction).then(|| "the conditions do not constrain w".to_string()),
            });
        }
        let pivot = self.leads.iter().position(|&k| k == m).expect("a row has the top order");
        // per point: pivot, D pivot, ..., up to W6
        let mut prolongations: Vec<Option<Vec<JetRow<T>>>> = Vec::with_capacity(npoints);
        for p in &self.points {
            let Some(p) = p else {
                prolongations.push(None);
                continue;
            };
            let mut chain = vec![p.rows[pivot].clone()];
            for _ in m..WIDTH - 1 {
                let next = p.frame.prolong(chain.last().expect("nonempty"))?;
                chain.push(next);
            }
            prolongations.push(Some(chain));
        }
        let reduce = |i: usize, row: &JetRow<T>| -> JetRow<T> {
            let chain = prolongations[i].as_ref().expect("usable point");
            let mut row = row.clone();
            for k in (m..WIDTH).rev() {
                let Some(c) = row.coeffs[k].clone() else { continue };
                row = row.sub(&chain[k - m].scale(&c));
                row.coeffs[k] = None;
            }
            row
        };
        let values = |row: &JetRow<T>| -> Vec<T> {
            let mut v: Vec<T> = (1..m).map(|k| row.value(k)).collect();
            v.push(row.value(0));
            v
        };

        type Candidate<T> = Vec<Option<JetRow<T>>>;
        let mut pending: Vec<Candidate<T>> = Vec::new();
        for (r, _) in self.leads.iter().enumerate().filter(|&(r, _)| r != pivot) {
            pending.push(self.points.iter().map(|p| p.as_ref().map(|p| p.rows[r].clone())).collect());
        }
        let mut first = Vec::with_capacity(npoints);
        for p in &self.points {
            first.push(match p {
                Some(p) => Some(p.frame.delta(&p.rows[pivot])?),
                None => None,
            });
        }
        pending.push(first);

        let mut basis: Vec<(Candidate<T>, Vec<Option<Vec<T>>>)> = Vec::new();
        let mut ranks = (0, 0);
        let mut iterations = 0;
        let stabilized;
        loop {
            let mut added = Vec::new();
            for cand in pending.drain(..) {
                let reduced: Candidate<T> = cand
                    .iter()
                    .enumerate()
                    .map(|(i, r)| r.as_ref().map(|r| reduce(i, r)))
                    .collect();
                let vals: Vec<Option<Vec<T>>> =
                    reduced.iter().map(|r| r.as_ref().map(&values)).collect();
                let mut rows: Vec<&Vec<Option<Vec<T>>>> = basis.iter().map(|(_, v)| v).collect();
                rows.push(&vals);
                let Some(new_ranks) = generic_ranks::<T>(&rows, m, npoints) else {
                    return Ok(Prolongation::inconclusive(
                        iterations,
                        "constraint rows could not be evaluated at most sample points",
                    ));
                };
                if new_ranks.1 > ranks.1 {
                    ranks = new_ranks;
                    added.push(reduced.clone());
                    basis.push((reduced, vals));
                }
            }
            if added.is_empty() {
                stabilized = true;
                break;
            }
            iterations += 1;
            if iterations >= max_iterations {
                return Ok(Prolongation::inconclusive(
                    iterations,
                    &format!("row pool did not stabilize within {iterations} iterations"),
                ));
            }
            for row in &added {
                let mut d = Vec::with_capacity(npoints);
                let mut pr = Vec::with_capacity(npoints);
                for (i, r) in row.iter().enumerate() {
                    match (r, &self.points[i]) {
                        (Some(r), Some(p)) => {
                            d.push(Some(p.frame.delta(r)?));
                            pr.push(Some(p.frame.prolong(r)?));
                        }
                        _ => {
                            d.push(None);
                            pr.push(None);
                        }
                    }
                }
                pending.push(d);
                pending.push(pr);
            }
        }
        let (rank_a, rank_aug) = ranks;
        let dim = if rank_aug > rank_a { -1 } else { m as i32 - rank_a as i32 };
        Ok(Prolongation {
            dim: Some(dim),
            iterations,
            stabilized,
            reason: None,
        })
    }
}

/// Divides `row` by its coefficient of order `k`; `None` at a zero of it.
fn normalize<T: Track>(row: &JetRow<T>, k: usize) -> Option<JetRow<T>> {
    if k == 0 {
        return Some(row.clone());
    }
    let lead = row.coeffs[k].as_ref()?;
    let one = Series::constant(T::from_int(1), lead.order());
    let inv = one.div(lead).ok()?;
    let mut out = row.scale(&inv);
    out.coeffs[k] = Some(one);
    for c in out.coeffs.iter_mut().skip(k + 1) {
        *c = None;
    }
    Some(out)
}

/// Ranks `(coefficient columns, augmented)` of the stacked rows at each
/// point, aggregated over points; `None` if fewer than half the points
/// are usable.
fn generic_ranks<T: Track>(
    rows: &[&Vec<Option<Vec<T>>>],
    width: usize,
    npoints: usize,
) -> Option<(usize, usize)> {
    let mut ranks = Vec::new();
    for i in 0..npoints {
        let m: Option<Vec<Vec<T>>> = rows.iter().map(|v| v[i].clone()).collect();
        if let Some(m) = m {
            if m.iter().flatten().all(|v| v.is_finite_value()) {
                ranks.push((T::rank(m.clone(), width - 1), T::rank(m, width)));
            }
        }
    }
    if 2 * ranks.len() < npoints.max(1) {
        return None;
    }
    if T::EXACT {
        let a = ranks.iter().map(|r| r.0).max()?;
        let b = ranks.iter().map(|r| r.1).max()?;
        Some((a, b))
    } else {
        let median = |mut v: Vec<usize>| {
            v.sort_unstable();
            v[v.len() / 2]
        };
        Some((
            median(ranks.iter().map(|r| r.0).collect()),
            median(ranks.iter().map(|r| r.1).collect()),
        ))
    }
}

/// Outcome of the prolongation loop.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Prolongation {
    /// `None` when inconclusive.
    pub dim: Option<i32>,
    pub iterations: usize,
    pub stabilized: bool,
    pub reason: Option<String>,
}

impl Prolongation {
    fn inconclusive(iterations: usize, why: &str) -> Prolongation {
        Prolongation {
            dim: None,
            iterations,
            stabilized: false,
            reason: Some(why.to_string()),
        }
    }
}
