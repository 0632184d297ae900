//! Sparse multivariate polynomials over Q with exact division and gcd.
//!
//! Variables are numbered; a monomial is its exponent vector with trailing
//! zeros trimmed, so the derived `Ord` on exponent vectors is the
//! lexicographic monomial order with variable 0 most significant.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mono(Vec<u32>);

impl Mono {
    pub fn one() -> Mono {
        Mono(Vec::new())
    }

    pub fn var(i: usize, e: u32) -> Mono {
        let mut v = vec![0; i + 1];
        v[i] = e;
        Mono(v).trimmed()
    }

    fn trimmed(mut self) -> Mono {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, o: &Mono) -> Mono {
        let n = self.0.len().max(o.0.len());
        Mono((0..n).map(|i| self.exp(i) + o.exp(i)).collect()).trimmed()
    }

    fn div(&self, o: &Mono) -> Option<Mono> {
        if o.0.len() > self.0.len() {
            return None;
        }
        let mut v = self.0.clone();
        for (i, &e) in o.0.iter().enumerate() {
            v[i] = v[i].checked_sub(e)?;
        }
        Some(Mono(v).trimmed())
    }

    fn without(&self, i: usize) -> Mono {
        let mut v = self.0.clone();
        if i < v.len() {
            v[i] = 0;
        }
        Mono(v).trimmed()
    }

    /// Apply a variable renaming `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Mono {
        let n = perm.iter().copied().max().map_or(0, |m| m + 1);
        let mut v = vec![0; n.max(self.0.len())];
        for (i, &e) in self.0.iter().enumerate() {
            v[perm[i]] = e;
        }
        Mono(v).trimmed()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigRational>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| format!("{c}*{:?}", m.0))
            .collect();
        write!(f, "Poly[{}]", parts.join(" + "))
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn var(i: usize) -> Poly {
        Poly::monomial(Mono::var(i, 1), BigRational::one())
    }

    pub fn monomial(m: Mono, c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Mono::one()).is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.0.is_empty())
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        (self.is_constant()).then(|| self.terms[&Mono::one()].clone())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    pub fn contains_var(&self, v: usize) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    /// One past the highest variable index that occurs.
    pub fn var_bound(&self) -> usize {
        self.terms.keys().map(|m| m.0.len()).max().unwrap_or(0)
    }

    /// Lex-leading term.
    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), -c);
        }
        r
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    fn mul_term(&self, m: &Mono, k: &BigRational) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let (small, big) = if self.len() <= o.len() { (self, o) } else { (o, self) };
        let mut r = Poly::zero();
        for (m, c) in &small.terms {
            for (n, d) in &big.terms {
                r.add_term(m.mul(n), c * d);
            }
        }
        r
    }

    pub fn pow(&self, mut n: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (lm_d, lc_d) = d.leading()?;
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (lm_d, lc_d) = (lm_d.clone(), lc_d.clone());
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((lm_r, lc_r)) = r.leading() {
            let m = lm_r.div(&lm_d)?;
            let c = lc_r / &lc_d;
            r = r.sub(&d.mul_term(&m, &c));
            q.add_term(m, c);
        }
        Some(q)
    }

    /// Coefficients with respect to variable `v`, indexed by degree.
    pub fn to_univariate(&self, v: usize) -> Vec<Poly> {
        let mut out = vec![Poly::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            out[m.exp(v) as usize].add_term(m.without(v), c.clone());
        }
        out
    }

    pub fn from_univariate(coeffs: &[Poly], v: usize) -> Poly {
        let mut r = Poly::zero();
        for (k, c) in coeffs.iter().enumerate() {
            let shift = Mono::var(v, k as u32);
            for (m, a) in &c.terms {
                r.add_term(m.mul(&shift), a.clone());
            }
        }
        r
    }

    /// Partial derivative with respect to variable `v`.
    pub fn derivative(&self, v: usize) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e > 0 {
                let mut exps = m.0.clone();
                exps[v] -= 1;
                r.add_term(Mono(exps).trimmed(), c * BigRational::from_integer(e.into()));
            }
        }
        r
    }

    pub fn permuted(&self, perm: &[usize]) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            r.add_term(m.permuted(perm), c.clone());
        }
        r
    }

    /// Factor `self = k * p` where `p` has coprime integer coefficients and a
    /// positive lex-leading coefficient. Returns `(p, k)`; zero maps to zero.
    pub fn integer_normalized(&self) -> (Poly, BigRational) {
        if self.is_zero() {
            return (Poly::zero(), BigRational::one());
        }
        let mut den_lcm = BigInt::one();
        let mut num_gcd = BigInt::zero();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
            num_gcd = num_gcd.gcd(c.numer());
        }
        let mut k = BigRational::new(num_gcd, den_lcm);
        if self.leading().is_some_and(|(_, c)| c.is_negative()) {
            k = -k;
        }
        (self.scale(&k.recip()), k)
    }

    pub fn normalized(&self) -> Poly {
        self.integer_normalized().0
    }

    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.normalized();
        }
        if b.is_zero() {
            return a.normalized();
        }
        if a.is_constant() || b.is_constant() {
            return Poly::one();
        }
        let v = a.var_bound().max(b.var_bound()) - 1;
        match (a.contains_var(v), b.contains_var(v)) {
            (false, false) => unreachable!("variable bound is attained by one operand"),
            (true, false) => Poly::gcd_with_coefficients(b, a, v),
            (false, true) => Poly::gcd_with_coefficients(a, b, v),
            (true, true) => {
                let ca = a.content(v);
                let cb = b.content(v);
                let pa = a.exact_div(&ca).expect("content divides");
                let pb = b.exact_div(&cb).expect("content divides");
                let gc = Poly::gcd(&ca, &cb);
                let (mut p, mut q) = if pa.degree_in(v) >= pb.degree_in(v) {
                    (pa, pb)
                } else {
                    (pb, pa)
                };
                while !q.is_zero() {
                    let r = p.pseudo_remainder(&q, v);
                    p = q;
                    q = if r.is_zero() { r } else { r.primitive_part(v) };
                }
                p.primitive_part(v).mul(&gc).normalized()
            }
        }
    }

    /// gcd of `a` (free of `v`) with every `v`-coefficient of `b`.
    fn gcd_with_coefficients(a: &Poly, b: &Poly, v: usize) -> Poly {
        let mut g = a.normalized();
        for c in b.to_univariate(v) {
            if g.is_one() {
                break;
            }
            if !c.is_zero() {
                g = Poly::gcd(&g, &c);
            }
        }
        g
    }

    /// gcd of the coefficients with respect to `v`.
    pub fn content(&self, v: usize) -> Poly {
        let mut g = Poly::zero();
        for c in self.to_univariate(v) {
            if c.is_zero() {
                continue;
            }
            g = if g.is_zero() { c.normalized() } else { Poly::gcd(&g, &c) };
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn primitive_part(&self, v: usize) -> Poly {
        let c = self.content(v);
        self.exact_div(&c).expect("content divides").normalized()
    }

    fn pseudo_remainder(&self, q: &Poly, v: usize) -> Poly {
        let qc = q.to_univariate(v);
        let dq = qc.len() - 1;
        let lcq = &qc[dq];
        let mut r = self.to_univariate(v);
        while r.len() > dq && r.iter().any(|c| !c.is_zero()) {
            let dr = r.len() - 1;
            let lcr = r[dr].clone();
            let shift = dr - dq;
            let mut next: Vec<Poly> = r.iter().map(|c| c.mul(lcq)).collect();
            for (k, c) in qc.iter().enumerate() {
                next[k + shift] = next[k + shift].sub(&c.mul(&lcr));
            }
            while next.len() > 1 && next.last().is_some_and(Poly::is_zero) {
                next.pop();
            }
            if next.len() == 1 && next[0].is_zero() {
                return Poly::zero();
            }
            // the leading coefficient cancels by construction
            debug_assert!(next.len() <= dr);
            r = next;
        }
        Poly::from_univariate(&r, v)
    }
}
