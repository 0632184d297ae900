use super::{compute_delta, SPrimeRelation, SwebError, WebSpec};
use crate::calculus::{diff_plain, is_zero, simplify, Affine, CalcError, Sampler};
use crate::expr::{Expr, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Generic,
    Singular,
}

/// Linear constraints on `W1..W6` (`W_k = w^(k)(f)`) that `w` must satisfy.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub kind: SystemKind,
    /// Order of the pivot row: 4 (generic) or 3 (singular) unless the
    /// expected leading coefficient vanishes.
    pub order: u8,
    /// Conditions before normalization: `J1, J2` or the mixed-derivative
    /// condition.
    pub raw_rows: Vec<Affine>,
    /// The rows above divided by their leading coefficients: `K, L` or `R`.
    pub base_rows: Vec<Affine>,
    /// Rows whose expected leading coefficient vanishes identically.
    pub degenerate_rows: Vec<String>,
}

impl ConstraintSystem {
    pub fn row_names(&self) -> &'static [&'static str] {
        match self.kind {
            SystemKind::Generic => &["K", "L"],
            SystemKind::Singular => &["R"],
        }
    }

    /// Expressions whose zero sets the rank computation must avoid.
    pub fn leading_coefficients(&self) -> Vec<Expr> {
        self.raw_rows
            .iter()
            .filter_map(|r| r.order().map(|k| r.coeff(k).clone()))
            .collect()
    }
}

pub(crate) fn tidy(row: &Affine) -> Affine {
    row.map(simplify)
}

fn check_order(row: &Affine, max: u8) -> Result<(), SwebError> {
    match row.order() {
        Some(k) if k > max => Err(SwebError::Calc(CalcError::NotAffine(format!(
            "condition of order {k} exceeds {max}"
        )))),
        _ => Ok(()),
    }
}

/// Divides `row` by its highest coefficient that is not identically zero.
/// Returns the monic row, its order, and whether `expected` was lost.
fn normalize(row: &Affine, expected: u8, sampler: &Sampler) -> (Affine, u8, bool) {
    let mut k = expected;
    while k > 0 {
        let c = row.coeff(k);
        if !c.is_literal_zero() && !is_zero(c, sampler).is_zero() {
            break;
        }
        k -= 1;
    }
    if k == 0 {
        return (row.clone(), 0, true);
    }
    let lead = row.coeff(k).clone();
    let mut out = tidy(&row.map(|c| c.clone() / lead.clone()));
    out.set_coeff(k, Expr::one());
    for j in k + 1..=expected {
        out.set_coeff(j, Expr::zero());
    }
    (out, k, k != expected)
}

/// Eliminates `s1′` and `s1″` from `P s1′ + s2′ = Q` and its derivatives
/// (requires `Δ ≠ 0`), leaving the solvability conditions
/// `J1 = ∂y E1`, `J2 = E2 - ∂x E1` with
/// `E1 = (P_y Q_x - P Q_xy) / Δ`, `E2 = (P_x Q_xy - P_xy Q_x) / Δ`.
pub fn derive_generic_system(
    spec: &WebSpec,
    rel: &SPrimeRelation,
    sampler: &Sampler,
) -> Result<ConstraintSystem, SwebError> {
    let ctx = spec.frame().context();
    let calc = SwebError::from_calc;
    let p = &rel.p;
    let px = diff_plain(p, Var::X);
    let py = diff_plain(p, Var::Y);
    let pxy = simplify(&diff_plain(&px, Var::Y));
    let (px, py) = (simplify(&px), simplify(&py));
    let delta = compute_delta(rel);
    let q = rel.q_affine();
    let qx = tidy(&q.partial(Var::X, ctx).map_err(calc)?);
    let qxy = tidy(&qx.partial(Var::Y, ctx).map_err(calc)?);
    let over_delta = |r: Affine| tidy(&r.map(|c| c.clone() / delta.clone()));
    let e1 = over_delta(qx.scale(&py).sub(&qxy.scale(p)));
    let e2 = over_delta(qxy.scale(&px).sub(&qx.scale(&pxy)));
    let j1 = tidy(&e1.partial(Var::Y, ctx).map_err(calc)?);
    let j2 = tidy(&e2.sub(&e1.partial(Var::X, ctx).map_err(calc)?));
    check_order(&j1, 4)?;
    check_order(&j2, 4)?;
    let (k_row, k_order, k_lost) = normalize(&j1, 4, sampler);
    let (l_row, l_order, l_lost) = normalize(&j2, 4, sampler);
    let mut degenerate_rows = Vec::new();
    if k_lost {
        degenerate_rows.push("K".to_string());
    }
    if l_lost {
        degenerate_rows.push("L".to_string());
    }
    Ok(ConstraintSystem {
        kind: SystemKind::Generic,
        order: k_order.max(l_order),
        raw_rows: vec![j1, j2],
        base_rows: vec![k_row, l_row],
        degenerate_rows,
    })
}

/// With `P = p1(x) p2(y)` the relation reads `p1 s1′ + s2′/p2 = G`,
/// `G = Q/p2`, whose left side has vanishing mixed derivative; the
/// condition `∂x∂y G = 0` is normalized to the `R` row.
pub fn derive_singular_system(
    spec: &WebSpec,
    rel: &SPrimeRelation,
    _p1: &Expr,
    p2: &Expr,
    sampler: &Sampler,
) -> Result<ConstraintSystem, SwebError> {
    let ctx = spec.frame().context();
    let calc = SwebError::from_calc;
    let g = tidy(&rel.q_affine().map(|c| c.clone() / p2.clone()));
    let gx = tidy(&g.partial(Var::X, ctx).map_err(calc)?);
    let cond = tidy(&gx.partial(Var::Y, ctx).map_err(calc)?);
    check_order(&cond, 3)?;
    let (r_row, order, lost) = normalize(&cond, 3, sampler);
    Ok(ConstraintSystem {
        kind: SystemKind::Singular,
        order,
        raw_rows: vec![cond],
        base_rows: vec![r_row],
        degenerate_rows: if lost { vec!["R".into()] } else { Vec::new() },
    })
}
