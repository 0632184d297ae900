use num_rational::BigRational;

use super::{SwebError, WebSpec};
use crate::calculus::{
    diff_plain, is_zero, sign_profile, simplify, zero_test, Affine, Sampler, ZeroTest,
    ZeroVerdict,
};
use crate::expr::{substitute, Expr, Symbol, Var};

/// `H = f_xy / (f_x f_y)`, the commutator coefficient
/// `[∂1, ∂2] = H (∂2 - ∂1)`.
pub fn compute_h(spec: &WebSpec) -> Expr {
    let frame = spec.frame();
    let fxy = diff_plain(frame.fx(), Var::Y);
    simplify(&(fxy / (frame.fx().clone() * frame.fy().clone())))
}

/// `P s1′(x) + s2′(y) = Q`, obtained by substituting the ansatz
/// `σ1 = -log|f_x| + s1`, `σ2 = -log|f_y| + s2`, `τ1 = w(f)` into
/// `b ∂1σ1 + (b - 1) ∂2τ1 + ∂2σ2 = 2bH - ∂1b`.
#[derive(Clone, Debug)]
pub struct SPrimeRelation {
    pub p: Expr,
    /// Affine in `W1`.
    pub q: Expr,
    /// Coefficients of `s1′` and `s2′` and the remaining terms before the
    /// `s2′` coefficient is normalized to 1.
    pub raw: [Expr; 3],
}

impl SPrimeRelation {
    pub fn q_affine(&self) -> Affine {
        Affine::from_expr(&self.q).expect("Q is affine in W1")
    }
}

/// `P = b f_y / f_x`, the coefficient of `s1′` once `s2′` is monic.
pub fn compute_pivot(spec: &WebSpec) -> Expr {
    let frame = spec.frame();
    simplify(&(spec.b.clone() * frame.fy().clone() / frame.fx().clone()))
}

pub fn derive_sprime_relation(spec: &WebSpec) -> Result<SPrimeRelation, SwebError> {
    let frame = spec.frame();
    let (fx, fy, b) = (frame.fx(), frame.fy(), &spec.b);
    // ∂i(-log|g|) = -∂i(g)/g avoids the absolute value
    let d1_sigma1 = -(frame.d1_plain(fx) / fx.clone());
    let d2_sigma2 = -(frame.d2_plain(fy) / fy.clone());
    let d2_tau1 = frame.d2(&Expr::w(0)).map_err(SwebError::from_calc)?;
    let h = compute_h(spec);
    let s1_coeff = b.clone() * frame.d1_plain(&Expr::x());
    let s2_coeff = frame.d2_plain(&Expr::y());
    let rest = b.clone() * d1_sigma1 + (b.clone() - Expr::one()) * d2_tau1 + d2_sigma2
        - Expr::int(2) * b.clone() * h
        + frame.d1_plain(b);
    let p = simplify(&(s1_coeff.clone() / s2_coeff.clone()));
    let q_raw = Affine::from_expr(&(-(rest.clone() / s2_coeff.clone())))
        .map_err(SwebError::from_calc)?;
    let q = q_raw.map(simplify);
    debug_assert!(q.order().unwrap_or(0) <= 1);
    Ok(SPrimeRelation {
        p,
        q: q.to_expr(),
        raw: [simplify(&s1_coeff), simplify(&s2_coeff), rest],
    })
}

/// `Δ = P_x P_y - P P_xy`; it vanishes identically iff `P` factors as
/// `p1(x) p2(y)` (where `P ≠ 0`).
pub fn compute_delta(rel: &SPrimeRelation) -> Expr {
    simplify(&pivot_delta(&rel.p))
}

/// Unsimplified `Δ`; the branch decision only evaluates it.
pub(crate) fn pivot_delta(p: &Expr) -> Expr {
    let px = diff_plain(p, Var::X);
    let py = diff_plain(p, Var::Y);
    let pxy = diff_plain(&px, Var::Y);
    px * py - p.clone() * pxy
}

#[derive(Clone, Debug, PartialEq)]
pub enum Branch {
    /// `Δ` has no zero on the domain.
    Generic,
    /// `Δ ≡ 0` and `P = p1(x) p2(y)`.
    Singular { p1: Expr, p2: Expr },
    /// `Δ` vanishes on part of the domain only.
    Mixed,
    /// The zero test on `Δ` was inconclusive.
    Undetermined,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Generic => "generic",
            Branch::Singular { .. } => "singular",
            Branch::Mixed => "mixed",
            Branch::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchDecision {
    pub branch: Branch,
    pub delta: Expr,
    pub delta_test: ZeroTest,
}

pub fn classify_branch(spec: &WebSpec, rel: &SPrimeRelation, sampler: &Sampler) -> BranchDecision {
    classify_pivot(spec, &rel.p, sampler)
}

/// Branch decision from the pivot `P` alone.
pub fn classify_pivot(spec: &WebSpec, p: &Expr, sampler: &Sampler) -> BranchDecision {
    let delta = pivot_delta(p);
    let delta_test = zero_test(&delta, sampler);
    let branch = match &delta_test.verdict {
        ZeroVerdict::Zero { .. } => {
            let (x0, y0) = spec.domain.center();
            let (p1, p2) = factor_pivot(p, x0, y0);
            match is_zero(&(p.clone() - p1.clone() * p2.clone()), sampler) {
                ZeroVerdict::Zero { .. } => Branch::Singular { p1, p2 },
                _ => Branch::Undetermined,
            }
        }
        ZeroVerdict::NonZero { .. } => {
            if sign_profile(&delta, sampler).constant_sign() {
                Branch::Generic
            } else {
                Branch::Mixed
            }
        }
        ZeroVerdict::Inconclusive { .. } => Branch::Undetermined,
    };
    BranchDecision {
        branch,
        delta,
        delta_test,
    }
}

/// `p1(x) = P(x, y0)`, `p2(y) = P(x0, y) / P(x0, y0)`.
fn factor_pivot(p: &Expr, x0: BigRational, y0: BigRational) -> (Expr, Expr) {
    let at = |e: &Expr, v: Var, q: &BigRational| substitute(e, Symbol::Var(v), &Expr::num(q.clone()));
    let p1 = simplify(&at(p, Var::Y, &y0));
    let p_x0 = at(p, Var::X, &x0);
    let p00 = at(&p_x0, Var::Y, &y0);
    let p2 = simplify(&(p_x0 / p00));
    (p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{Domain, SamplePlan};
    use crate::expr::parse;

    fn p(t: &str) -> Expr {
        parse(t).unwrap()
    }

    fn spec_on(f: &str, b: &str, d: Domain) -> WebSpec {
        WebSpec::new(p(f), p(b), d, SamplePlan::default()).unwrap()
    }

    fn spec(f: &str, b: &str) -> WebSpec {
        spec_on(f, b, Domain::from_ints(1, 2, 1, 2))
    }

    fn same(a: &Expr, b: &Expr) -> bool {
        simplify(&(a.clone() - b.clone())).is_literal_zero()
    }

    #[test]
    fn h_examples() {
        assert_eq!(compute_h(&spec("x + y", "2")), Expr::zero());
        assert!(same(&compute_h(&spec("x*y", "2")), &p("1/(x*y)")));
        let s = spec("exp(x + y)", "2");
        assert!(is_zero(&(compute_h(&s) - p("exp(-(x + y))")), s.sampler()).is_zero());
    }

    #[test]
    fn sprime_examples() {
        let r = derive_sprime_relation(&spec("x + y", "2")).unwrap();
        assert_eq!(r.p, p("2"));
        assert!(same(&r.q, &Expr::neg(Expr::w(1))));
        let r = derive_sprime_relation(&spec("x + y", "x + y")).unwrap();
        assert!(same(&r.p, &p("x + y")));
        let expected = Expr::sub(Expr::int(-1), Expr::mul(p("x + y - 1"), Expr::w(1)));
        assert!(same(&r.q, &expected));
    }

    #[test]
    fn sprime_matches_closed_form() {
        for (f, b) in [("x^2*y + y", "x + 3"), ("x*y + x^3", "2 + x*y^2"), ("exp(x)*y", "3 + x")] {
            let s = spec(f, b);
            let r = derive_sprime_relation(&s).unwrap();
            let fr = s.frame();
            let (fx, fy) = (fr.fx().clone(), fr.fy().clone());
            let d = |e: &Expr, v| diff_plain(e, v);
            let bb = s.b.clone();
            let h = d(&fx, Var::Y) / (fx.clone() * fy.clone());
            let b1 = -(d(&bb, Var::X) / fx.clone());
            let q = fy.clone()
                * (bb.clone() * d(&fx, Var::X) / fx.clone().pown(2)
                    + d(&fy, Var::Y) / fy.clone().pown(2)
                    - Expr::int(2) * bb.clone() * h
                    + b1
                    - (bb.clone() - Expr::one()) * Expr::w(1));
            let pv = bb * fy / fx;
            assert!(is_zero(&(r.p.clone() - pv), s.sampler()).is_zero(), "{f}");
            assert!(is_zero(&(r.q.clone() - q), s.sampler()).is_zero(), "{f}");
        }
    }

    #[test]
    fn delta_examples() {
        let rel = |e: &str| SPrimeRelation {
            p: p(e),
            q: Expr::zero(),
            raw: [Expr::zero(), Expr::zero(), Expr::zero()],
        };
        assert_eq!(compute_delta(&rel("2")), Expr::zero());
        assert_eq!(compute_delta(&rel("x + y")), Expr::one());
        assert_eq!(compute_delta(&rel("x*y")), Expr::zero());
    }

    #[test]
    fn branches() {
        let s = spec("x + y", "2");
        let r = derive_sprime_relation(&s).unwrap();
        let d = classify_branch(&s, &r, s.sampler());
        assert_eq!(
            d.branch,
            Branch::Singular {
                p1: p("2"),
                p2: p("1")
            }
        );
        let s = spec("x + y", "x + y");
        let r = derive_sprime_relation(&s).unwrap();
        assert_eq!(classify_branch(&s, &r, s.sampler()).branch, Branch::Generic);
        let d: Domain = "[-1,1]x[1,2]".parse().unwrap();
        let s = spec_on("x + y", "x^2*y + 3", d);
        let r = derive_sprime_relation(&s).unwrap();
        let dec = classify_branch(&s, &r, s.sampler());
        assert!(same(&dec.delta, &p("-6*x")));
        assert_eq!(dec.branch, Branch::Mixed);
    }

    #[test]
    fn coordinate_web_has_homogeneous_relation() {
        let s = crate::sweb::from_generating_function(
            p("x^3/6 + x*y + y^3/6"),
            "[6/5,2]x[6/5,2]".parse().unwrap(),
            SamplePlan::default(),
        )
        .unwrap();
        let r = derive_sprime_relation(&s).unwrap();
        let q0 = substitute(&r.q, Symbol::W(1), &Expr::zero());
        assert_eq!(is_zero(&q0, s.sampler()), ZeroVerdict::Zero { certified: true });
    }
}
