mod common;

use common::*;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sweb_core::calculus::{diff_plain, is_zero, simplify, Domain, SamplePlan};
use sweb_core::cli::AnalyzeReport;
use sweb_core::expr::{evaluate, format, parse, rational_from_f64, substitute, Bindings, Expr, Mode, Symbol, Tape, Var, SLOTS};
use sweb_core::jets::{jet_eval, jet_eval_exact};
use sweb_core::sweb::{
    classify_branch, compute_h, compute_rank, cross_ratio, derive_sprime_relation, w_dimension,
    Branch, WDimension, WebSpec,
};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn unit() -> Domain {
    Domain::from_ints(1, 2, 1, 2)
}

fn exact_at(e: &Expr, x: &BigRational, y: &BigRational) -> Option<BigRational> {
    evaluate(e, &Bindings::xy(x.clone(), y.clone()), Mode::Exact)
        .ok()
        .and_then(|v| v.as_exact().cloned())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_inverts_format(e in any_expr()) {
        let text = format(&e);
        let back = parse(&text);
        prop_assert_eq!(back.as_ref().ok(), Some(&e), "{}", text);
    }

    #[test]
    fn substituting_a_variable_for_itself_is_identity(e in any_expr()) {
        prop_assert_eq!(&substitute(&e, Symbol::Var(Var::X), &Expr::x()), &e);
        prop_assert_eq!(&substitute(&e, Symbol::Var(Var::Y), &Expr::y()), &e);
    }

    #[test]
    fn float_evaluation_tracks_exact(e in rational_expr(), xn in -40i64..40, yn in -40i64..40) {
        let (x, y) = (q(xn, 7), q(yn, 11));
        let Some(exact) = exact_at(&e, &x, &y) else { return Ok(()) };
        let mut slots = [None; SLOTS];
        slots[0] = Some(xn as f64 / 7.0);
        slots[1] = Some(yn as f64 / 11.0);
        // the float path may still overflow or hit a rounded-off zero divisor
        let Ok(v) = Tape::compile([&e]).eval_f64_scaled(&slots) else { return Ok(()) };
        let (float, scale) = v[0];
        let exact = sweb_core::expr::rational_to_f64(&exact);
        prop_assert!(
            (float - exact).abs() <= 1e-12 * exact.abs().max(scale),
            "{} at ({}, {}): {} vs {}", e, xn, yn, float, exact
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplify_is_idempotent(e in rational_expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn simplify_is_idempotent_with_functions(e in any_expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    /// Exact jets of polynomials equal exact symbolic derivatives.
    #[test]
    fn exact_jets_match_symbolic_derivatives(seed in any::<u64>(), xn in 1i64..30, yn in 1i64..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = p(&random_poly(&mut rng, 4, &[]));
        let (x, y) = (q(xn, 13), q(-yn, 17));
        let jet = jet_eval_exact(&e, (x.clone(), y.clone()), 5).unwrap();
        let float = jet_eval(&e, (xn as f64 / 13.0, -yn as f64 / 17.0), 5).unwrap();
        for i in 0..=5usize {
            for j in 0..=5 - i {
                let mut d = e.clone();
                for _ in 0..i { d = diff_plain(&d, Var::X); }
                for _ in 0..j { d = diff_plain(&d, Var::Y); }
                let want = exact_at(&d, &x, &y).unwrap();
                prop_assert_eq!(jet.get(i, j).unwrap(), want.clone(), "{} d{}{}", e, i, j);
                let want = sweb_core::expr::rational_to_f64(&want);
                let got = float.get(i, j).unwrap();
                prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
            }
        }
    }
}

#[test]
fn first_order_jets_match_central_differences() {
    let h = 1e-5;
    for text in CORPUS {
        let e = p(text);
        let tape = Tape::compile([&e]);
        let at = |x: f64, y: f64| {
            let mut s = [None; SLOTS];
            s[0] = Some(x);
            s[1] = Some(y);
            tape.eval_f64(&s).unwrap()[0]
        };
        for (x, y) in [(1.25, 1.5), (1.7, 1.1), (1.9, 1.8)] {
            let jet = jet_eval(&e, (x, y), 1).unwrap();
            let fd = [
                (at(x + h, y) - at(x - h, y)) / (2.0 * h),
                (at(x, y + h) - at(x, y - h)) / (2.0 * h),
            ];
            for (got, want) in [jet.get(1, 0).unwrap(), jet.get(0, 1).unwrap()].into_iter().zip(fd) {
                let rel = (got - want).abs() / got.abs().max(1e-3);
                assert!(rel < 1e-6, "{text} at ({x}, {y}): {got} vs {want}");
            }
        }
    }
}

#[test]
fn web_function_is_a_first_integral_of_delta() {
    for text in CORPUS {
        let Ok(spec) = WebSpec::new(p(text), p("2"), unit(), SamplePlan::default()) else {
            continue;
        };
        let d = spec.frame().delta_plain(&spec.f);
        assert!(simplify(&d).is_literal_zero(), "δ({text}) = {}", simplify(&d));
    }
}

#[test]
fn frame_commutator_is_curvature_times_difference() {
    let rational = rational_corpus();
    let mut checked = 0;
    for f in &rational {
        let Ok(spec) = WebSpec::new(p(f), p("2"), unit(), SamplePlan::default()) else {
            continue;
        };
        let frame = spec.frame();
        let hh = compute_h(&spec);
        for h in &rational {
            let h = p(h);
            let (d1, d2) = (frame.d1_plain(&h), frame.d2_plain(&h));
            let lhs = frame.d1_plain(&d2) - frame.d2_plain(&d1);
            let rhs = hh.clone() * (d2 - d1);
            let v = is_zero(&(lhs - rhs), spec.sampler());
            assert!(v.is_zero(), "f = {f}, h = {h}: {v:?}");
            checked += 1;
        }
    }
    assert!(checked >= 25, "{checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalized_forms_satisfy_s_condition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_web(&mut rng, &unit(), &SamplePlan::default()).unwrap();
        let forms = spec.normalized_forms();
        let v = sweb_core::sweb::verify_s_condition(&forms, spec.sampler()).unwrap();
        prop_assert_eq!(v, sweb_core::calculus::ZeroVerdict::Zero { certified: true });
    }

    /// With rational covectors the cross-ratio equals `1/b` exactly.
    #[test]
    fn cross_ratio_is_inverse_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_web(&mut rng, &unit(), &SamplePlan::default()).unwrap();
        let forms = spec.normalized_forms();
        for pt in spec.sampler().points().iter().take(8) {
            let (x, y) = (pt.exact[0].clone().unwrap(), pt.exact[1].clone().unwrap());
            let cov: Vec<(BigRational, BigRational)> = forms
                .forms
                .iter()
                .map(|(a, c)| (exact_at(a, &x, &y).unwrap(), exact_at(c, &x, &y).unwrap()))
                .collect();
            let cov: [(BigRational, BigRational); 4] = cov.try_into().unwrap();
            let b = exact_at(&spec.b, &x, &y).unwrap();
            prop_assert_eq!(cross_ratio(&cov).unwrap(), q(1, 1) / b);
        }
    }

    #[test]
    fn coordinate_webs_admit_trivial_solution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Domain = "[1.2,2]x[1.2,2]".parse().unwrap();
        let Ok(spec) = random_coordinate_web(&mut rng, &d, &SamplePlan::default()) else {
            return Ok(());
        };
        let rel = derive_sprime_relation(&spec).unwrap();
        let q0 = substitute(&rel.q, Symbol::W(1), &Expr::zero());
        prop_assert!(is_zero(&q0, spec.sampler()).is_zero(), "Q|W1=0 = {}", q0);
        let decision = classify_branch(&spec, &rel, spec.sampler());
        if matches!(decision.branch, Branch::Generic | Branch::Singular { .. }) {
            let sampler = match &decision.branch {
                Branch::Singular { p2, .. } => spec.sampler_excluding(std::slice::from_ref(p2)),
                _ => spec.sampler_excluding(std::slice::from_ref(&decision.delta)),
            };
            match w_dimension(&spec, &decision.branch, &sampler) {
                WDimension::Dim(k) => prop_assert!(k >= 0, "{} | {}: dim {}", spec.f, spec.b, k),
                WDimension::Inconclusive(why) => prop_assert!(false, "inconclusive: {}", why),
            }
        }
    }

    /// Webs with `f = a(x) + c(y)` and decomposable `b` have a decomposable
    /// pivot; the extracted factors reproduce it.
    #[test]
    fn singular_branch_factors_the_pivot(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_poly(&mut rng, 3, &[(1, 0)]).replace("*y^0", "").replace("y^", "x^");
        let c = random_poly(&mut rng, 3, &[(0, 1)]).replace("x^", "y^");
        let f = format!("({a}) + ({c})");
        let b = format!("(2 + {}) * (1 + {})", random_poly(&mut rng, 2, &[]).replace("y^", "x^"),
            random_poly(&mut rng, 2, &[]).replace("x^", "y^"));
        let spec = WebSpec::new(p(&f), p(&b), unit(), SamplePlan::default()).unwrap();
        let rel = derive_sprime_relation(&spec).unwrap();
        let decision = classify_branch(&spec, &rel, spec.sampler());
        let Branch::Singular { p1, p2 } = decision.branch else {
            return Err(TestCaseError::fail(format!("{f} | {b}: {:?}", decision.branch)));
        };
        prop_assert!(is_zero(&(rel.p.clone() - p1 * p2), spec.sampler()).is_zero());
    }

    #[test]
    fn reports_are_deterministic_and_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Domain = "[1.2,2]x[1.2,2]".parse().unwrap();
        let spec = if seed % 2 == 0 {
            random_web(&mut rng, &unit(), &SamplePlan::default())
        } else {
            random_coordinate_web(&mut rng, &d, &SamplePlan::default())
        };
        let Ok(spec) = spec else { return Ok(()) };
        let Ok(first) = compute_rank(&spec) else { return Ok(()) };
        let second = compute_rank(&spec).unwrap();
        prop_assert_eq!(format!("{first:?}"), format!("{second:?}"));
        let json = AnalyzeReport::new(&spec, &first, None).to_json();
        let back: AnalyzeReport = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.to_json(), json);
    }
}

#[test]
fn decimal_points_convert_exactly() {
    // sample coordinates are dyadic, so float and exact points coincide
    assert_eq!(rational_from_f64(1.375), Some(q(11, 8)));
}
