use num_traits::Num;

use super::SwebError;
use crate::calculus::{
    diff_plain, is_zero, sign_profile, simplify, Domain, SamplePlan, Sampler, WebFrame,
    ZeroVerdict,
};
use crate::expr::{Expr, Tape, Var};

/// A validated web: `f_x`, `f_y`, `b` and `b - 1` keep a constant sign on
/// the domain.
#[derive(Clone, Debug)]
pub struct WebSpec {
    pub f: Expr,
    pub b: Expr,
    pub domain: Domain,
    pub plan: SamplePlan,
    /// The generating function, for coordinate webs.
    pub phi: Option<Expr>,
    frame: WebFrame,
    sampler: Sampler,
}

impl WebSpec {
    pub fn new(f: Expr, b: Expr, domain: Domain, plan: SamplePlan) -> Result<WebSpec, SwebError> {
        if plan.samples < 20 {
            return Err(SwebError::Unsupported(format!(
                "at least 20 samples are required, got {}",
                plan.samples
            )));
        }
        if f.contains_w() || b.contains_w() {
            return Err(SwebError::Unsupported("W indeterminates in web data".into()));
        }
        let frame = WebFrame::new(&f).map_err(SwebError::from_calc)?;
        let b1 = simplify(&(b.clone() - Expr::one()));
        let loci = [
            ("f_x", frame.fx().clone()),
            ("f_y", frame.fy().clone()),
            ("b", b.clone()),
            ("b - 1", b1),
        ];
        let probe = Sampler::new(domain.clone(), plan.clone(), &[]);
        for (name, e) in &loci {
            let prof = sign_profile(e, &probe);
            if !prof.constant_sign() {
                let why = if prof.failed > 0 {
                    "cannot be evaluated everywhere"
                } else {
                    "vanishes or changes sign"
                };
                return Err(SwebError::DegenerateWeb(format!(
                    "{name} = {e} {why} on {domain}"
                )));
            }
        }
        let exclusions: Vec<Expr> = loci.into_iter().map(|(_, e)| e).collect();
        let sampler = Sampler::new(domain.clone(), plan.clone(), &exclusions);
        Ok(WebSpec {
            f,
            b,
            domain,
            plan,
            phi: None,
            frame,
            sampler,
        })
    }

    pub fn frame(&self) -> &WebFrame {
        &self.frame
    }

    /// Sample points avoiding the zero sets of `f_x`, `f_y`, `b`, `b - 1`.
    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    /// Sampler that also avoids the zero sets of `extra`.
    pub fn sampler_excluding(&self, extra: &[Expr]) -> Sampler {
        let mut loci = vec![
            self.frame.fx().clone(),
            self.frame.fy().clone(),
            self.b.clone(),
            self.b.clone() - Expr::one(),
        ];
        loci.extend(extra.iter().cloned());
        Sampler::new(self.domain.clone(), self.plan.clone(), &loci)
    }

    pub fn normalized_forms(&self) -> FormQuadruple {
        let (fx, fy) = (self.frame.fx().clone(), self.frame.fy().clone());
        FormQuadruple::new([
            (-fx.clone(), Expr::zero()),
            (Expr::zero(), -fy.clone()),
            (fx.clone(), fy.clone()),
            (fx, self.b.clone() * fy),
        ])
    }

    /// Coefficients of `ω3 + ω1 + ω2` and `ω4 + ω1 + b ω2`, which vanish
    /// identically.
    pub fn normalization_residuals(&self) -> [Expr; 4] {
        let w = &self.normalized_forms().forms;
        let sum = |a: &(Expr, Expr), c: &(Expr, Expr), s: Expr| {
            (
                a.0.clone() + c.0.clone() * s.clone(),
                a.1.clone() + c.1.clone() * s,
            )
        };
        let first = sum(&w[2], &w[0], Expr::one());
        let first = sum(&first, &w[1], Expr::one());
        let second = sum(&w[3], &w[0], Expr::one());
        let second = sum(&second, &w[1], self.b.clone());
        [first.0, first.1, second.0, second.1]
    }
}

/// Four 1-forms `a dx + c dy`, as `(a, c)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct FormQuadruple {
    pub forms: [(Expr, Expr); 4],
}

impl FormQuadruple {
    pub fn new(forms: [(Expr, Expr); 4]) -> FormQuadruple {
        FormQuadruple { forms }
    }

    /// The `dx∧dy` coefficient of `ω3∧ω1 + ω4∧ω2`.
    pub fn s_scalar(&self) -> Expr {
        let [(a1, c1), (a2, c2), (a3, c3), (a4, c4)] = self.forms.clone();
        a3 * c1 - c3 * a1 + a4 * c2 - c4 * a2
    }

    /// Float covectors at a point.
    pub fn covectors_at(&self, x: f64, y: f64) -> Result<[(f64, f64); 4], SwebError> {
        let roots: Vec<&Expr> = self.forms.iter().flat_map(|(a, c)| [a, c]).collect();
        let tape = Tape::compile(roots);
        let mut slots = [None; crate::expr::SLOTS];
        slots[0] = Some(x);
        slots[1] = Some(y);
        let v = tape
            .eval_f64(&slots)
            .map_err(|e| SwebError::DegenerateWeb(format!("form evaluation failed: {e}")))?;
        Ok(std::array::from_fn(|i| (v[2 * i], v[2 * i + 1])))
    }

    /// Fails when some form vanishes at a sample point.
    pub fn check_nonvanishing(&self, sampler: &Sampler) -> Result<(), SwebError> {
        for p in sampler.points() {
            let cov = self.covectors_at(p.x(), p.y())?;
            for (i, (a, c)) in cov.iter().enumerate() {
                if a.abs().max(c.abs()) <= sampler.threshold(0.0) {
                    return Err(SwebError::DegenerateWeb(format!(
                        "form {} vanishes at ({}, {})",
                        i + 1,
                        p.x(),
                        p.y()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Zero iff the forms satisfy the Maxwell-Samuelson area condition
/// `ω3∧ω1 + ω4∧ω2 = 0`.
pub fn verify_s_condition(
    forms: &FormQuadruple,
    sampler: &Sampler,
) -> Result<ZeroVerdict, SwebError> {
    forms.check_nonvanishing(sampler)?;
    Ok(is_zero(&forms.s_scalar(), sampler))
}

/// `CR(t1, t2; t3, t4) = (t3 - t1)(t4 - t2) / ((t3 - t2)(t4 - t1))` for the
/// slopes `t_i = c_i / a_i`, computed from `2×2` determinants so that
/// infinite slopes need no special case.
pub fn cross_ratio<T: Num + Clone>(covectors: &[(T, T); 4]) -> Result<T, SwebError> {
    let d = |i: usize, j: usize| {
        let (ai, ci) = covectors[i].clone();
        let (aj, cj) = covectors[j].clone();
        ci * aj - cj * ai
    };
    for i in 0..4 {
        for j in i + 1..4 {
            if d(i, j).is_zero() {
                return Err(SwebError::RepeatedDirection);
            }
        }
    }
    Ok(d(2, 0) * d(3, 1) / (d(2, 1) * d(3, 0)))
}

/// The coordinate web of the Lagrangian surface `ξ = Φ_x`, `η = Φ_y`:
/// `f = Φ_x`, `b = Φ_xx Φ_yy / Φ_xy²`.
pub fn from_generating_function(
    phi: Expr,
    domain: Domain,
    plan: SamplePlan,
) -> Result<WebSpec, SwebError> {
    if phi.contains_w() {
        return Err(SwebError::Unsupported("W indeterminates in web data".into()));
    }
    let phi_x = diff_plain(&phi, Var::X);
    let phi_y = diff_plain(&phi, Var::Y);
    let phi_xx = simplify(&diff_plain(&phi_x, Var::X));
    let phi_xy = simplify(&diff_plain(&phi_x, Var::Y));
    let phi_yy = simplify(&diff_plain(&phi_y, Var::Y));
    if phi_xy.is_literal_zero() {
        return Err(SwebError::DegenerateWeb(
            "Φ_xy vanishes identically, the fourth family collapses".into(),
        ));
    }
    let f = simplify(&phi_x);
    let b = simplify(&(phi_xx * phi_yy / phi_xy.pown(2)));
    let mut spec = WebSpec::new(f, b, domain, plan)?;
    spec.phi = Some(phi);
    Ok(spec)
}
