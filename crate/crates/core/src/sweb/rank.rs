use super::local::{Elimination, Fp, LocalError, LocalSystem, Prolongation, Scaled, Track};
use super::relation::{classify_pivot, compute_pivot};
use super::{Branch, SwebError, SystemKind, WebSpec};
use crate::calculus::{Sampler, Witness, ZeroVerdict};
use crate::expr::{Expr, Mode};

/// Jet order of the first attempt; enough for three prolongation rounds.
const FIRST_JET_ORDER: usize = 10;

/// Jet order needed before the rows are monic: `Q` uses second
/// derivatives of `f`, the elimination three more.
const ROW_JET_COST: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub enum WDimension {
    /// `-1` when the constraints are inconsistent.
    Dim(i32),
    Inconclusive(String),
}

/// One maximality condition and its zero test.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub verdict: ZeroVerdict,
    /// Largest sampled absolute value.
    pub residual: f64,
}

/// How the constraint system was evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSummary {
    pub kind: SystemKind,
    /// Order `m` of the pivot row.
    pub order: usize,
    /// Lead order of each base row (`K, L` or `R`).
    pub leads: Vec<usize>,
    /// Rows whose expected leading coefficient vanishes identically.
    pub degenerate_rows: Vec<String>,
    pub iterations: usize,
    pub stabilized: bool,
    /// Whether decisions were made modulo a prime rather than in floats.
    pub exact: bool,
    pub jet_order: usize,
}

/// Branch data needed by the rank procedure.
struct Analysis {
    branch: Branch,
    delta: Expr,
    delta_verdict: ZeroVerdict,
    /// `None` on an undetermined branch.
    elimination: Option<(Elimination, Sampler)>,
}

fn analyze(spec: &WebSpec) -> Result<Analysis, SwebError> {
    let p = compute_pivot(spec);
    let decision = classify_pivot(spec, &p, spec.sampler());
    let elimination = match &decision.branch {
        Branch::Mixed => {
            return Err(SwebError::MixedBranch(format!(
                "Δ is not sign-constant on {} but does not vanish identically; shrink the domain",
                spec.domain
            )))
        }
        Branch::Undetermined => None,
        Branch::Generic => Some((
            Elimination::Generic,
            spec.sampler_excluding(std::slice::from_ref(&decision.delta)),
        )),
        Branch::Singular { p2, .. } => Some((
            Elimination::Singular { p2: p2.clone() },
            spec.sampler_excluding(std::slice::from_ref(p2)),
        )),
    };
    Ok(Analysis {
        branch: decision.branch,
        delta: decision.delta,
        delta_verdict: decision.delta_test.verdict,
        elimination,
    })
}

/// Results of the pointwise evaluation.
struct Evaluation {
    summary: SystemSummary,
    dim: WDimension,
    conditions: Vec<Condition>,
    notes: Vec<String>,
}

type ConditionValues<T> = Vec<(String, Vec<Option<(T, T)>>)>;

fn condition_verdicts<T: Track>(
    decide: &ConditionValues<T>,
    float: &ConditionValues<Scaled>,
    sampler: &Sampler,
) -> Vec<Condition> {
    let points = sampler.points();
    decide
        .iter()
        .zip(float)
        .map(|((name, dv), (_, fv))| {
            let residual = fv
                .iter()
                .flatten()
                .map(|(a, b)| (a.v - b.v).abs())
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max);
            let failed = dv.iter().filter(|v| v.is_none()).count();
            let nonzero: Vec<usize> = (0..dv.len())
                .filter(|&i| dv[i].is_some_and(|(a, b)| (a - b).nonzero()))
                .collect();
            let witness = nonzero.iter().find_map(|&i| {
                fv[i].map(|(a, b)| Witness {
                    x: points[i].x(),
                    y: points[i].y(),
                    value: a.v - b.v,
                })
            });
            let verdict = if dv.is_empty() || 2 * failed > dv.len() {
                ZeroVerdict::Inconclusive {
                    reason: format!(
                        "{failed} of {} sample points could not be evaluated",
                        dv.len()
                    ),
                }
            } else if let Some(witness) = witness {
                ZeroVerdict::NonZero { witness }
            } else if !nonzero.is_empty() {
                ZeroVerdict::Inconclusive {
                    reason: "nonzero only where float values are unavailable".into(),
                }
            } else {
                ZeroVerdict::Zero { certified: false }
            };
            Condition {
                name: name.clone(),
                verdict,
                residual,
            }
        })
        .collect()
}

fn row_names(kind: SystemKind) -> &'static [&'static str] {
    match kind {
        SystemKind::Generic => &["K", "L"],
        SystemKind::Singular => &["R"],
    }
}

/// One attempt at a fixed jet order: decisions on track `T`, residuals and
/// witnesses from a float track that follows the same lead orders.
fn evaluate_with<T: Track>(
    spec: &WebSpec,
    elimination: &Elimination,
    sampler: &Sampler,
    jet_order: usize,
) -> Result<Evaluation, LocalError> {
    let decide = LocalSystem::<T>::build(spec, elimination, sampler, jet_order, None)?;
    let float =
        LocalSystem::<Scaled>::build(spec, elimination, sampler, jet_order, Some(&decide.leads))?;
    let kind = match elimination {
        Elimination::Generic => SystemKind::Generic,
        Elimination::Singular { .. } => SystemKind::Singular,
    };
    let expected = elimination.expected_order();
    let degenerate_rows = row_names(kind)
        .iter()
        .zip(&decide.leads)
        .filter(|(_, &k)| k != expected)
        .map(|(n, _)| n.to_string())
        .collect();
    let conditions = condition_verdicts(
        &decide.conditions(elimination)?,
        &float.conditions(elimination)?,
        sampler,
    );
    let Prolongation {
        dim,
        iterations,
        stabilized,
        reason,
    } = decide.w_dimension(spec.plan.max_iterations)?;
    let mut notes = Vec::new();
    if decide.usable_points() < sampler.points().len() {
        notes.push(format!(
            "{} of {} sample points were dropped at poles of the rows",
            sampler.points().len() - decide.usable_points(),
            sampler.points().len()
        ));
    }
    let dim = match (dim, reason) {
        (Some(d), _) => WDimension::Dim(d),
        (None, why) => WDimension::Inconclusive(why.unwrap_or_default()),
    };
    Ok(Evaluation {
        summary: SystemSummary {
            kind,
            order: decide.order(),
            leads: decide.leads.clone(),
            degenerate_rows,
            iterations,
            stabilized,
            exact: T::EXACT,
            jet_order,
        },
        dim,
        conditions,
        notes,
    })
}

fn evaluate(
    spec: &WebSpec,
    elimination: &Elimination,
    sampler: &Sampler,
) -> Result<Evaluation, SwebError> {
    let mut notes = Vec::new();
    let mut exact = spec.plan.mode == Mode::Exact;
    let last = ROW_JET_COST + spec.plan.max_iterations + 2;
    let mut jet_order = FIRST_JET_ORDER.min(last);
    loop {
        let attempt = if exact {
            evaluate_with::<Fp>(spec, elimination, sampler, jet_order)
        } else {
            evaluate_with::<Scaled>(spec, elimination, sampler, jet_order)
        };
        match attempt {
            Ok(mut ev) => {
                notes.append(&mut ev.notes);
                ev.notes = notes;
                return Ok(ev);
            }
            Err(LocalError::Unrepresentable(why)) if exact => {
                notes.push(format!("exact evaluation unavailable ({why}); decided in floats"));
                exact = false;
            }
            Err(LocalError::Exhausted) if jet_order < last => jet_order = last,
            Err(LocalError::Exhausted) => {
                return Err(SwebError::Unsupported(format!(
                    "rows need derivatives beyond jet order {jet_order}"
                )))
            }
            Err(LocalError::Overflow) => {
                return Err(SwebError::Unsupported("prolongation would exceed W6".into()))
            }
            Err(LocalError::Unrepresentable(why)) => return Err(SwebError::Unsupported(why)),
        }
    }
}

/// Dimension of the space of `w` satisfying the constraints of `branch`.
///
/// The pivot row is monic of order `m`. Every other row is reduced below
/// order `m` using the pivot and its prolongations; the pool is closed
/// under `δ` and the prolongation `D = -∂1` (`D(W_k) = W_{k+1}`), keeping
/// only rows that raise the functional rank. With `r` independent reduced
/// rows, initial data `(w, w′, ..., w^(m-1))` has `m - r` free parameters,
/// or none if the constant column raises the rank.
pub fn w_dimension(spec: &WebSpec, branch: &Branch, sampler: &Sampler) -> WDimension {
    let elimination = match branch {
        Branch::Generic => Elimination::Generic,
        Branch::Singular { p2, .. } => Elimination::Singular { p2: p2.clone() },
        other => {
            return WDimension::Inconclusive(format!(
                "no constraint system on the {} branch",
                other.name()
            ))
        }
    };
    match evaluate(spec, &elimination, sampler) {
        Ok(ev) => ev.dim,
        Err(e) => WDimension::Inconclusive(e.to_string()),
    }
}

#[derive(Clone, Debug)]
pub struct RankReport {
    pub branch: Branch,
    pub delta: Expr,
    pub delta_verdict: ZeroVerdict,
    pub conditions: Vec<Condition>,
    /// `None` when inconclusive.
    pub dim_w: Option<i32>,
    pub base_dim: u32,
    /// `None` when inconclusive.
    pub rank: Option<u32>,
    pub solvable: bool,
    pub maximal: bool,
    pub inconclusive: bool,
    pub system: Option<SystemSummary>,
    /// Sample points used by the rank computation.
    pub samples: usize,
    pub notes: Vec<String>,
}

/// Runs the whole pipeline. Degenerate webs and a mixed branch are errors;
/// inconclusive zero tests are reported, not raised.
pub fn compute_rank(spec: &WebSpec) -> Result<RankReport, SwebError> {
    let analysis = analyze(spec)?;
    let base_dim = match analysis.branch {
        Branch::Singular { .. } => 3,
        _ => 2,
    };
    let Some((elimination, sampler)) = analysis.elimination else {
        return Ok(RankReport {
            branch: analysis.branch,
            delta: analysis.delta,
            delta_verdict: analysis.delta_verdict,
            conditions: Vec::new(),
            dim_w: None,
            base_dim,
            rank: None,
            solvable: false,
            maximal: false,
            inconclusive: true,
            system: None,
            samples: spec.sampler().points().len(),
            notes: vec!["zero test on Δ was inconclusive".into()],
        });
    };
    let ev = evaluate(spec, &elimination, &sampler)?;
    let mut notes = ev.notes;
    for name in &ev.summary.degenerate_rows {
        notes.push(format!("leading coefficient of the {name} row vanishes identically"));
    }
    let (dim_w, rank, solvable, mut inconclusive) = match ev.dim {
        WDimension::Dim(d) if d >= 0 => (Some(d), Some(base_dim + d as u32), true, false),
        WDimension::Dim(d) => (Some(d), Some(0), false, false),
        WDimension::Inconclusive(why) => {
            notes.push(why);
            (None, None, false, true)
        }
    };
    if let Some(r) = rank {
        assert!(r <= 6, "rank {r} exceeds the finite-type bound");
    }
    if analysis.delta_verdict.is_inconclusive() {
        inconclusive = true;
    }
    Ok(RankReport {
        branch: analysis.branch,
        delta: analysis.delta,
        delta_verdict: analysis.delta_verdict,
        conditions: ev.conditions,
        dim_w,
        base_dim,
        rank,
        solvable,
        maximal: rank == Some(6),
        inconclusive,
        samples: sampler.points().len(),
        system: Some(ev.summary),
        notes,
    })
}

#[derive(Clone, Debug)]
pub struct MaximalityReport {
    pub branch: Branch,
    pub maximal: bool,
    /// Some condition could not be decided.
    pub inconclusive: bool,
    pub conditions: Vec<Condition>,
}

/// Rank 6 iff `K_i = L_i` and `δ(K_i) = 0` for all `i` (generic branch), or
/// `δ(R_i) = 0` for all `i` (singular branch).
pub fn check_maximal(spec: &WebSpec) -> Result<MaximalityReport, SwebError> {
    let analysis = analyze(spec)?;
    let Some((elimination, sampler)) = analysis.elimination else {
        return Ok(MaximalityReport {
            branch: analysis.branch,
            maximal: false,
            inconclusive: true,
            conditions: Vec::new(),
        });
    };
    let ev = evaluate(spec, &elimination, &sampler)?;
    let degenerate = !ev.summary.degenerate_rows.is_empty();
    let inconclusive = ev.conditions.iter().any(|c| c.verdict.is_inconclusive());
    let maximal = !degenerate && ev.conditions.iter().all(|c| c.verdict.is_zero());
    Ok(MaximalityReport {
        branch: analysis.branch,
        maximal,
        inconclusive,
        conditions: ev.conditions,
    })
}
