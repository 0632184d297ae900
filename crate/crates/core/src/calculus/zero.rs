//! Randomized zero testing on a rectangular domain.
//!
//! Sample points are dyadic rationals drawn from a seeded stream, so exact
//! and float evaluation see the same points. Points near the zero set of any
//! exclusion expression are skipped. `W` indeterminates receive independent
//! random values at each point.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::simplify::normal_form;
use crate::expr::{parse, rational_to_f64, slot, Expr, Mode, Symbol, Tape, Var, SLOTS};

/// Grid resolution for sample coordinates: `lo + (hi - lo) k / RESOLUTION`.
const RESOLUTION: i64 = 1 << 12;
/// Expressions larger than this (in DAG nodes) are not normalized for a
/// proof certificate; the sampled verdict stands.
const CERTIFY_LIMIT: usize = 3000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub x: (BigRational, BigRational),
    pub y: (BigRational, BigRational),
}

impl Domain {
    pub fn new(x: (BigRational, BigRational), y: (BigRational, BigRational)) -> Option<Domain> {
        (x.0 < x.1 && y.0 < y.1).then_some(Domain { x, y })
    }

    pub fn from_ints(x0: i64, x1: i64, y0: i64, y1: i64) -> Domain {
        let q = |n: i64| BigRational::from_integer(n.into());
        Domain::new((q(x0), q(x1)), (q(y0), q(y1))).expect("ordered bounds")
    }

    pub fn center(&self) -> (BigRational, BigRational) {
        let two = BigRational::from_integer(2.into());
        (
            (&self.x.0 + &self.x.1) / &two,
            (&self.y.0 + &self.y.1) / &two,
        )
    }

    /// Corners and center, in a fixed order.
    pub fn landmarks(&self) -> Vec<(BigRational, BigRational)> {
        let mut v = vec![self.center()];
        for xv in [&self.x.0, &self.x.1] {
            for yv in [&self.y.0, &self.y.1] {
                v.push((xv.clone(), yv.clone()));
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid domain {0:?}: expected [x0,x1]x[y0,y1] with x0 < x1, y0 < y1")]
pub struct DomainParseError(pub String);

impl FromStr for Domain {
    type Err = DomainParseError;

    fn from_str(s: &str) -> Result<Domain, DomainParseError> {
        let err = || DomainParseError(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (xs, ys) = compact.split_once("]x[").ok_or_else(err)?;
        let xs = xs.strip_prefix('[').ok_or_else(err)?;
        let ys = ys.strip_suffix(']').ok_or_else(err)?;
        let bound = |t: &str| -> Result<BigRational, DomainParseError> {
            parse(t)
                .ok()
                .and_then(|e| e.as_num().cloned())
                .ok_or_else(err)
        };
        let pair = |t: &str| -> Result<(BigRational, BigRational), DomainParseError> {
            let (a, b) = t.split_once(',').ok_or_else(err)?;
            Ok((bound(a)?, bound(b)?))
        };
        Domain::new(pair(xs)?, pair(ys)?).ok_or_else(err)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = |v: &BigRational| format(&Expr::num(v.clone()));
        write!(
            f,
            "[{},{}]x[{},{}]",
            q(&self.x.0),
            q(&self.x.1),
            q(&self.y.0),
            q(&self.y.1)
        )
    }
}

fn format(e: &Expr) -> String {
    crate::expr::format(e).replace(' ', "")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub margin: f64,
    pub mode: Mode,
    pub max_iterations: usize,
}

impl Default for SamplePlan {
    fn default() -> SamplePlan {
        SamplePlan {
            samples: 32,
            seed: 1,
            tol: 1e-9,
            margin: 1e-6,
            mode: Mode::Exact,
            max_iterations: 8,
        }
    }
}

/// One sample point with its `W` assignment, in both number systems.
#[derive(Clone, Debug)]
pub struct SamplePoint {
    pub exact: [Option<BigRational>; SLOTS],
    pub float: [Option<f64>; SLOTS],
}

impl SamplePoint {
    fn new(exact: [BigRational; SLOTS]) -> SamplePoint {
        let float = std::array::from_fn(|i| Some(rational_to_f64(&exact[i])));
        SamplePoint {
            exact: exact.map(Some),
            float,
        }
    }

    pub fn x(&self) -> f64 {
        self.float[slot(Symbol::Var(Var::X))].unwrap_or(f64::NAN)
    }

    pub fn y(&self) -> f64 {
        self.float[slot(Symbol::Var(Var::Y))].unwrap_or(f64::NAN)
    }
}

/// A fixed set of sample points for one analysis.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub domain: Domain,
    pub plan: SamplePlan,
    points: Vec<SamplePoint>,
}

impl Sampler {
    /// Draws `plan.samples` points, skipping those where some exclusion
    /// expression is within `plan.margin` of zero or fails to evaluate.
    pub fn new(domain: Domain, plan: SamplePlan, exclusions: &[Expr]) -> Sampler {
        let tape = Tape::compile(exclusions);
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let mut points = Vec::with_capacity(plan.samples);
        let max_draws = 200 * plan.samples.max(1);
        let res = BigRational::from_integer(RESOLUTION.into());
        for _ in 0..max_draws {
            if points.len() >= plan.samples {
                break;
            }
            let mut coord = |lo: &BigRational, hi: &BigRational| {
                let k = rng.gen_range(1..RESOLUTION);
                lo + (hi - lo) * BigRational::from_integer(k.into()) / &res
            };
            let xq = coord(&domain.x.0, &domain.x.1);
            let yq = coord(&domain.y.0, &domain.y.1);
            let exact: [BigRational; SLOTS] = std::array::from_fn(|i| match i {
                0 => xq.clone(),
                1 => yq.clone(),
                _ => {
                    // W values in [-2, 2] away from zero
                    let mut k: i64 = rng.gen_range(RESOLUTION / 8..=2 * RESOLUTION);
                    if rng.gen::<bool>() {
                        k = -k;
                    }
                    BigRational::new(BigInt::from(k), BigInt::from(RESOLUTION))
                }
            });
            let point = SamplePoint::new(exact);
            let ok = exclusions.is_empty()
                || match tape.eval_f64(&point.float) {
                    Ok(vals) => vals.iter().all(|v| v.abs() >= plan.margin),
                    Err(_) => false,
                };
            if ok {
                points.push(point);
            }
        }
        Sampler {
            domain,
            plan,
            points,
        }
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    /// Absolute tolerance for a float value with rounding scale `scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.plan.tol * (1.0 + scale)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    /// `certified` is true when a normal form proved the identity.
    Zero { certified: bool },
    NonZero { witness: Witness },
    Inconclusive { reason: String },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero { .. })
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, ZeroVerdict::Inconclusive { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::Zero { .. } => "zero",
            ZeroVerdict::NonZero { .. } => "nonzero",
            ZeroVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::NonZero { witness } => Some(witness),
            _ => None,
        }
    }
}

/// Verdict plus the evidence behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroTest {
    pub verdict: ZeroVerdict,
    /// Largest absolute sampled value.
    pub max_abs: f64,
    pub evaluated: usize,
    pub failed: usize,
}

pub fn is_zero(e: &Expr, sampler: &Sampler) -> ZeroVerdict {
    zero_test(e, sampler).verdict
}

/// Exact mode evaluates rational expressions exactly, so a nonzero sample
/// is a proof of nonvanishing; other expressions fall back to floats with
/// a rounding-aware threshold.
pub fn zero_test(e: &Expr, sampler: &Sampler) -> ZeroTest {
    if let Some(q) = e.as_num() {
        let verdict = if q.is_zero() {
            ZeroVerdict::Zero { certified: true }
        } else {
            let (x, y) = sampler
                .points()
                .first()
                .map(|p| (p.x(), p.y()))
                .unwrap_or_else(|| {
                    let (cx, cy) = sampler.domain.center();
                    (rational_to_f64(&cx), rational_to_f64(&cy))
                });
            ZeroVerdict::NonZero {
                witness: Witness {
                    x,
                    y,
                    value: rational_to_f64(q),
                },
            }
        };
        return ZeroTest {
            max_abs: rational_to_f64(q).abs(),
            verdict,
            evaluated: 0,
            failed: 0,
        };
    }
    let points = sampler.points();
    let exact = sampler.plan.mode == Mode::Exact && e.is_rational();
    let tape = Tape::compile([e]);
    let mut failed = 0;
    let mut evaluated = 0;
    let mut max_abs: f64 = 0.0;
    let mut witness: Option<Witness> = None;
    for p in points {
        let value = if exact {
            tape.eval_exact(&p.exact).map(|v| {
                let f = rational_to_f64(&v[0]);
                (f, !v[0].is_zero())
            })
        } else {
            tape.eval_f64_scaled(&p.float).map(|v| {
                let (f, scale) = v[0];
                (f, f.abs() > sampler.threshold(scale))
            })
        };
        match value {
            Ok((f, nonzero)) => {
                evaluated += 1;
                max_abs = max_abs.max(f.abs());
                if nonzero && witness.is_none() {
                    witness = Some(Witness {
                        x: p.x(),
                        y: p.y(),
                        value: f,
                    });
                }
            }
            Err(_) => failed += 1,
        }
    }
    let verdict = if points.is_empty() || 2 * failed > points.len() {
        ZeroVerdict::Inconclusive {
            reason: format!(
                "{} of {} sample points could not be evaluated",
                failed + sampler.plan.samples.saturating_sub(points.len()),
                sampler.plan.samples
            ),
        }
    } else if let Some(witness) = witness {
        ZeroVerdict::NonZero { witness }
    } else if e.dag_size() <= CERTIFY_LIMIT {
        match normal_form(e) {
            Some(nf) if nf.is_zero() => ZeroVerdict::Zero { certified: true },
            Some(nf) if nf.is_rational() => ZeroVerdict::Inconclusive {
                reason: "nonzero normal form vanished at every sample".into(),
            },
            _ => ZeroVerdict::Zero { certified: false },
        }
    } else {
        ZeroVerdict::Zero { certified: false }
    };
    ZeroTest {
        verdict,
        max_abs,
        evaluated,
        failed,
    }
}

/// Sign distribution of an expression over the sample points.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SignProfile {
    pub positive: usize,
    pub negative: usize,
    /// Samples within tolerance of zero.
    pub near_zero: usize,
    pub failed: usize,
    pub min_abs: f64,
}

impl SignProfile {
    pub fn constant_sign(&self) -> bool {
        self.near_zero == 0
            && self.failed == 0
            && (self.positive == 0) != (self.negative == 0)
    }
}

/// Float sign profile of `e` over the sampler's points and the domain
/// landmarks (center and corners).
pub fn sign_profile(e: &Expr, sampler: &Sampler) -> SignProfile {
    let tape = Tape::compile([e]);
    let mut prof = SignProfile {
        min_abs: f64::INFINITY,
        ..SignProfile::default()
    };
    let landmarks = sampler.domain.landmarks().into_iter().map(|(x, y)| {
        let mut float = [Some(1.0); SLOTS];
        float[0] = Some(rational_to_f64(&x));
        float[1] = Some(rational_to_f64(&y));
        float
    });
    let slots = sampler.points().iter().map(|p| p.float).chain(landmarks);
    for s in slots {
        match tape.eval_f64_scaled(&s) {
            Ok(v) => {
                let (f, scale) = v[0];
                prof.min_abs = prof.min_abs.min(f.abs());
                if f.abs() <= sampler.threshold(scale) {
                    prof.near_zero += 1;
                } else if f > 0.0 {
                    prof.positive += 1;
                } else {
                    prof.negative += 1;
                }
            }
            Err(_) => prof.failed += 1,
        }
    }
    prof
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: &str) -> Expr {
        parse(t).unwrap()
    }

    fn sampler(mode: Mode) -> Sampler {
        let plan = SamplePlan {
            mode,
            ..SamplePlan::default()
        };
        Sampler::new(Domain::from_ints(1, 2, 1, 2), plan, &[])
    }

    #[test]
    fn domain_parse_and_display() {
        let d: Domain = "[1, 2] x [-1/2, 3.5]".parse().unwrap();
        assert_eq!(d.to_string(), "[1,2]x[-1/2,7/2]");
        assert!("[2,1]x[0,1]".parse::<Domain>().is_err());
        assert!("[0,1]".parse::<Domain>().is_err());
    }

    #[test]
    fn identities_are_zero() {
        for mode in [Mode::Exact, Mode::Float] {
            let s = sampler(mode);
            let v = is_zero(&p("(x + y)^2 - x^2 - 2*x*y - y^2"), &s);
            assert_eq!(v, ZeroVerdict::Zero { certified: true });
            let v = is_zero(&p("sin(x)^2 + cos(x)^2 - 1"), &s);
            assert!(v.is_zero(), "{v:?}");
        }
    }

    #[test]
    fn nonzero_has_witness() {
        let s = sampler(Mode::Exact);
        let v = is_zero(&p("x - y"), &s);
        let w = v.witness().expect("witness");
        assert!((w.value - (w.x - w.y)).abs() < 1e-12);
        assert!(is_zero(&p("3"), &s).is_nonzero());
    }

    #[test]
    fn w_symbols_are_independent() {
        let s = sampler(Mode::Exact);
        let e = Expr::sub(Expr::w(1), Expr::w(2));
        assert!(is_zero(&e, &s).is_nonzero());
        let e = Expr::sub(Expr::mul(Expr::w(1), p("x")), Expr::mul(p("x"), Expr::w(1)));
        assert!(is_zero(&e, &s).is_zero());
    }

    #[test]
    fn failing_evaluations_are_inconclusive() {
        let plan = SamplePlan::default();
        let s = Sampler::new(Domain::from_ints(-2, -1, 1, 2), plan, &[]);
        assert!(is_zero(&p("log(x)"), &s).is_inconclusive());
    }

    #[test]
    fn exclusions_skip_poles() {
        let plan = SamplePlan::default();
        let s = Sampler::new(Domain::from_ints(-1, 1, -1, 1), plan, &[p("x - y")]);
        assert_eq!(s.points().len(), 32);
        assert!(s.points().iter().all(|pt| (pt.x() - pt.y()).abs() >= 1e-6));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sampler(Mode::Exact);
        let b = sampler(Mode::Exact);
        for (p, q) in a.points().iter().zip(b.points()) {
            assert_eq!(p.exact, q.exact);
        }
    }

    #[test]
    fn sign_profiles() {
        let s = sampler(Mode::Float);
        assert!(sign_profile(&p("x*y"), &s).constant_sign());
        let s = Sampler::new(Domain::from_ints(-1, 1, 1, 2), SamplePlan::default(), &[]);
        assert!(!sign_profile(&p("x*y"), &s).constant_sign());
    }
}
