//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sweb_core::calculus::{
    diff_plain, is_zero, simplify, Affine, Domain, SamplePlan, ZeroVerdict,
};
use sweb_core::expr::{substitute, Expr, Mode, Symbol, Tape, Var, SLOTS};
use sweb_core::jets::jet_eval;
use sweb_core::sweb::{
    check_maximal, classify_branch, closedness_residual, compute_delta, compute_h, compute_rank,
    cross_ratio, derive_generic_system, derive_singular_system, derive_sprime_relation,
    from_generating_function, reconstruct_singular_ansatz, verify_s_condition, Branch,
    SwebError, WebSpec,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn domain(text: &str) -> Domain {
    text.parse().unwrap()
}

fn spec(f: &str, b: &str, d: &str) -> WebSpec {
    WebSpec::new(p(f), p(b), domain(d), SamplePlan::default()).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    simplify(&(a.clone() - b.clone())).is_literal_zero()
}

fn slots_at(x: f64, y: f64) -> [Option<f64>; SLOTS] {
    let mut s = [None; SLOTS];
    s[0] = Some(x);
    s[1] = Some(y);
    s
}

fn rank_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let d = Domain::from_ints(1, 2, 1, 2);
    let plan = SamplePlan::default();
    let (mut solved, mut unsolvable, mut refused, mut inconclusive, mut max_rank) = (0, 0, 0, 0, 0);
    let mut violations = Vec::new();
    for k in 0..200 {
        let spec = if k % 4 == 3 {
            random_coordinate_web(&mut rng, &d, &plan)
        } else {
            random_web(&mut rng, &d, &plan)
        };
        let Ok(spec) = spec else {
            refused += 1;
            continue;
        };
        match catch_unwind(AssertUnwindSafe(|| compute_rank(&spec))) {
            Ok(Ok(r)) if r.inconclusive => inconclusive += 1,
            Ok(Ok(r)) => {
                let rank = r.rank.unwrap_or(0);
                max_rank = max_rank.max(rank);
                if r.solvable {
                    solved += 1;
                    if rank > 6 {
                        violations.push(format!("{} | {}: rank {rank}", spec.f, spec.b));
                    }
                } else {
                    unsolvable += 1;
                }
            }
            Ok(Err(SwebError::MixedBranch(_) | SwebError::DegenerateWeb(_))) => refused += 1,
            Ok(Err(e)) => violations.push(format!("{} | {}: {e}", spec.f, spec.b)),
            Err(_) => violations.push(format!("{} | {}: panicked", spec.f, spec.b)),
        }
    }
    let elapsed = start.elapsed();
    ensure!(violations.is_empty(), "{} violations, first: {}", violations.len(), violations[0]);
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:.1?}");
    ensure!(inconclusive == 0, "{inconclusive} inconclusive reports");
    Ok(format!(
        "200 webs: {solved} solvable (max rank {max_rank}), {unsolvable} unsolvable, {refused} refused, {elapsed:.1?}"
    ))
}

fn constant_invariant_fixture() -> Outcome {
    let s = spec("x + y", "2", "[1,2]x[1,2]");
    let rel = derive_sprime_relation(&s).map_err(|e| e.to_string())?;
    let Branch::Singular { p1, p2 } = classify_branch(&s, &rel, s.sampler()).branch else {
        return Err("branch is not singular".into());
    };
    let sys = derive_singular_system(&s, &rel, &p1, &p2, s.sampler()).map_err(|e| e.to_string())?;
    let r_row = &sys.base_rows[0];
    ensure!(*r_row == Affine::term(3, Expr::one()), "R row is {}", r_row.to_expr());
    let r = compute_rank(&s).map_err(|e| e.to_string())?;
    ensure!(r.dim_w == Some(3) && r.rank == Some(6), "dim_w {:?}, rank {:?}", r.dim_w, r.rank);
    let m = check_maximal(&s).map_err(|e| e.to_string())?;
    ensure!(r.maximal && m.maximal, "maximal {} / {}", r.maximal, m.maximal);
    Ok("singular, R row W3, dim_W 3, rank 6, maximal".into())
}

/// `J1`, `J2` evaluated for a concrete `w` two ways: from the symbolic rows
/// with `W_k = w^(k)(f)`, and by jet arithmetic on the closed-form `P, Q`
/// without any symbolic elimination.
fn jets_check_of_conditions(s: &WebSpec, rows: &[Affine]) -> Result<f64, String> {
    // f = x + y, b = x + y: P = b, Q = -b_x - (b - 1) w'(f)
    let w_derivs = |t: f64| -> [f64; 5] {
        let e = (t / 2.0).exp();
        [e + t.powi(5) / 120.0, e / 2.0 + t.powi(4) / 24.0, e / 4.0 + t.powi(3) / 6.0, e / 8.0 + t * t / 2.0, e / 16.0 + t]
    };
    let w1 = p("exp((x + y)/2)/2 + (x + y)^4/24");
    let pp = p("x + y");
    let q = p("-1") - (p("x + y - 1") * w1);
    let tapes: Vec<Tape> = rows.iter().map(|r| Tape::compile(r.coeffs())).collect();
    let mut worst: f64 = 0.0;
    for pt in s.sampler().points().iter().take(20) {
        let (x, y) = (pt.x(), pt.y());
        let ps = jet_eval(&pp, (x, y), 4).map_err(|e| e.to_string())?.series().clone();
        let qs = jet_eval(&q, (x, y), 4).map_err(|e| e.to_string())?.series().clone();
        let (px, py) = (ps.partial(Var::X), ps.partial(Var::Y));
        let pxy = px.partial(Var::Y);
        let qx = qs.partial(Var::X);
        let qxy = qx.partial(Var::Y);
        let delta = px.mul(&py).sub(&ps.mul(&pxy));
        let e1 = py.mul(&qx).sub(&ps.mul(&qxy)).div(&delta).map_err(|e| e.to_string())?;
        let e2 = px.mul(&qxy).sub(&pxy.mul(&qx)).div(&delta).map_err(|e| e.to_string())?;
        let j1 = *e1.partial(Var::Y).value();
        let j2 = e2.value() - e1.partial(Var::X).value();
        let wd = w_derivs(x + y);
        for (tape, want) in tapes.iter().zip([j1, j2]) {
            let coeffs = tape.eval_f64(&slots_at(x, y)).map_err(|e| e.to_string())?;
            let got: f64 = coeffs[0] + (1..=4).map(|k| coeffs[k] * wd[k]).sum::<f64>();
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn linear_invariant_fixture() -> Outcome {
    let s = spec("x + y", "x + y", "[1.5,3]x[1.5,3]");
    let rel = derive_sprime_relation(&s).map_err(|e| e.to_string())?;
    let decision = classify_branch(&s, &rel, s.sampler());
    ensure!(decision.branch == Branch::Generic, "branch {:?}", decision.branch);
    ensure!(compute_delta(&rel) == Expr::one(), "Δ = {}", compute_delta(&rel));
    let sampler = s.sampler_excluding(std::slice::from_ref(&decision.delta));
    let sys = derive_generic_system(&s, &rel, &sampler).map_err(|e| e.to_string())?;
    let (k, l) = (&sys.base_rows[0], &sys.base_rows[1]);
    let b = "(x + y)";
    ensure!(same(k.coeff(3), &p("3/(x + y - 1)")), "K3 = {}", k.coeff(3));
    ensure!((0..3).all(|i| k.coeff(i).is_literal_zero()), "K2..K0 not zero: {}", k.to_expr());
    ensure!(same(l.coeff(3), &p(&format!("(4*{b} - 1)/({b}*({b} - 1))"))), "L3 = {}", l.coeff(3));
    ensure!(same(l.coeff(2), &p(&format!("2/({b}*({b} - 1))"))), "L2 = {}", l.coeff(2));
    let residual = jets_check_of_conditions(&s, &sys.raw_rows)?;
    ensure!(residual < 1e-8, "jets residual {residual:e}");
    let r = compute_rank(&s).map_err(|e| e.to_string())?;
    ensure!(r.dim_w == Some(3) && r.rank == Some(5), "dim_w {:?}, rank {:?}", r.dim_w, r.rank);
    ensure!(!r.maximal && !check_maximal(&s).map_err(|e| e.to_string())?.maximal, "reported maximal");
    Ok(format!("generic, Δ = 1, K3/L3/L2 match, jets residual {residual:.1e}, dim_W 3, rank 5"))
}

fn coordinate_web_fixture() -> Outcome {
    let s = from_generating_function(p("x^3/6 + x*y + y^3/6"), domain("[1.2,2]x[1.2,2]"), SamplePlan::default())
        .map_err(|e| e.to_string())?;
    ensure!(same(&s.f, &p("x^2/2 + y")) && same(&s.b, &p("x*y")), "f = {}, b = {}", s.f, s.b);
    let rel = derive_sprime_relation(&s).map_err(|e| e.to_string())?;
    let q0 = substitute(&rel.q, Symbol::W(1), &Expr::zero());
    let v = is_zero(&q0, s.sampler());
    ensure!(v == ZeroVerdict::Zero { certified: true }, "Q|W1=0: {v:?}");
    let r = compute_rank(&s).map_err(|e| e.to_string())?;
    ensure!(matches!(r.branch, Branch::Singular { .. }), "branch {}", r.branch.name());
    ensure!(r.solvable && r.dim_w == Some(2) && r.rank == Some(5), "dim_w {:?}, rank {:?}", r.dim_w, r.rank);
    Ok("(f, b) = (x^2/2 + y, x*y), singular, Q|W1=0 certified zero, dim_W 2, rank 5".into())
}

fn s_condition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let d = Domain::from_ints(1, 2, 1, 2);
    let mut failures = Vec::new();
    for _ in 0..50 {
        let s = random_web(&mut rng, &d, &SamplePlan::default()).map_err(|e| e.to_string())?;
        match verify_s_condition(&s.normalized_forms(), s.sampler()) {
            Ok(ZeroVerdict::Zero { certified: true }) => {}
            other => failures.push(format!("{} | {}: {other:?}", s.f, s.b)),
        }
    }
    ensure!(failures.is_empty(), "{} failures, first: {}", failures.len(), failures[0]);
    Ok("50 random rational webs, all certified zero".into())
}

fn cross_ratio_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let d = Domain::from_ints(1, 2, 1, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let s = random_web(&mut rng, &d, &SamplePlan::default()).map_err(|e| e.to_string())?;
        let forms = s.normalized_forms();
        let b = Tape::compile([&s.b]);
        for _ in 0..10 {
            let (x, y) = (rng.gen_range(1.0..2.0), rng.gen_range(1.0..2.0));
            let cov = forms.covectors_at(x, y).map_err(|e| e.to_string())?;
            let cr = cross_ratio(&cov).map_err(|e| e.to_string())?;
            let bv = b.eval_f64(&slots_at(x, y)).map_err(|e| e.to_string())?[0];
            worst = worst.max((cr - 1.0 / bv).abs());
        }
    }
    ensure!(worst < 1e-9, "largest deviation {worst:e}");
    Ok(format!("100 points over 10 webs, largest |CR - 1/b| = {worst:.1e}"))
}

fn derivative_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for text in CORPUS {
        let e = p(text);
        // symbolic partials d[i][j] = ∂x^i ∂y^j e, i + j <= 6
        let mut roots = Vec::new();
        let mut index = Vec::new();
        let mut row = e.clone();
        for i in 0..=6 {
            let mut d = row.clone();
            for j in 0..=6 - i {
                roots.push(d.clone());
                index.push((i, j));
                d = diff_plain(&d, Var::Y);
            }
            row = diff_plain(&row, Var::X);
        }
        let tape = Tape::compile(&roots);
        for _ in 0..20 {
            let (x, y) = (rng.gen_range(1.0..2.0), rng.gen_range(1.0..2.0));
            let sym = tape.eval_f64(&slots_at(x, y)).map_err(|err| format!("{text}: {err}"))?;
            let jet = jet_eval(&e, (x, y), 6).map_err(|err| format!("{text}: {err}"))?;
            for (&(i, j), s) in index.iter().zip(&sym) {
                let a = jet.get(i, j).unwrap();
                worst = worst.max((s - a).abs() / a.abs().max(1.0));
                compared += 1;
            }
        }
    }
    ensure!(worst < 1e-6, "largest relative error {worst:e}");
    let mut commutators = 0;
    for f in rational_corpus() {
        let Ok(s) = WebSpec::new(p(f), p("2"), Domain::from_ints(1, 2, 1, 2), SamplePlan::default()) else {
            continue;
        };
        let (frame, hh) = (s.frame(), compute_h(&s));
        for h in rational_corpus() {
            let h = p(h);
            let (d1, d2) = (frame.d1_plain(&h), frame.d2_plain(&h));
            let defect = frame.d1_plain(&d2) - frame.d2_plain(&d1) - hh.clone() * (d2 - d1);
            let v = is_zero(&defect, s.sampler());
            ensure!(v == ZeroVerdict::Zero { certified: true }, "commutator for f = {f}, h = {h}: {v:?}");
            commutators += 1;
        }
    }
    Ok(format!(
        "{compared} partials, largest relative error {worst:.1e}; {commutators} commutator identities certified"
    ))
}

fn maximality_consistency() -> Outcome {
    let mut corpus = vec![
        spec("x + y", "2", "[1,2]x[1,2]"),
        spec("x + y", "x + y", "[1.5,3]x[1.5,3]"),
        from_generating_function(p("x^3/6 + x*y + y^3/6"), domain("[1.2,2]x[1.2,2]"), SamplePlan::default())
            .unwrap(),
        spec("x*y", "3", "[1,2]x[1,2]"),
        spec("x^2 + y^2", "2 + x", "[1,2]x[1,2]"),
        spec("exp(x) + y", "2", "[1,2]x[1,2]"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let d = Domain::from_ints(1, 2, 1, 2);
    for k in 0..40 {
        let s = if k % 2 == 0 {
            random_web(&mut rng, &d, &SamplePlan::default())
        } else {
            random_coordinate_web(&mut rng, &d, &SamplePlan::default())
        };
        corpus.extend(s.ok());
    }
    let (mut checked, mut maximal) = (0, 0);
    for s in &corpus {
        let (Ok(r), Ok(m)) = (compute_rank(s), check_maximal(s)) else { continue };
        if r.inconclusive || m.inconclusive {
            continue;
        }
        ensure!(m.maximal == (r.rank == Some(6)), "{} | {}: check_maximal {} but rank {:?}", s.f, s.b, m.maximal, r.rank);
        checked += 1;
        maximal += m.maximal as usize;
    }
    ensure!(checked >= 30, "only {checked} decided members");
    Ok(format!("{checked} decided webs ({maximal} maximal), fixtures included"))
}

fn closedness() -> Outcome {
    let plan = SamplePlan {
        samples: 100,
        ..SamplePlan::default()
    };
    let s = WebSpec::new(p("x + y"), p("2"), Domain::from_ints(1, 2, 1, 2), plan).unwrap();
    let rel = derive_sprime_relation(&s).map_err(|e| e.to_string())?;
    let Branch::Singular { p1, p2 } = classify_branch(&s, &rel, s.sampler()).branch else {
        return Err("branch is not singular".into());
    };
    let ansatz = reconstruct_singular_ansatz(&s, &rel, &p1, &p2, &p("x^2")).map_err(|e| e.to_string())?;
    ensure!(s.sampler().points().len() == 100, "{} points", s.sampler().points().len());
    let r = closedness_residual(&s, &ansatz, s.sampler()).map_err(|e| e.to_string())?;
    ensure!(r < 1e-8, "residual {r:e}");
    Ok(format!(
        "w = t^2, s1 = {}, s2 = {}: residual {r:.1e} over 100 points",
        ansatz.s1, ansatz.s2
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("web.cfg");
    std::fs::write(&cfg, "f = x*y + x^3\nb = 2 + x*y^2\ndomain = [1,2]x[1,2]\nseed = 17\n")
        .map_err(|e| e.to_string())?;
    let run = |mode: Mode| {
        Command::new(env!("CARGO_BIN_EXE_sweb"))
            .args(["--json", "--mode", &mode.to_string(), "analyze", cfg.to_str().unwrap()])
            .output()
            .map(|o| o.stdout)
            .map_err(|e| e.to_string())
    };
    for mode in [Mode::Exact, Mode::Float] {
        let (a, b) = (run(mode)?, run(mode)?);
        ensure!(!a.is_empty(), "{mode}: empty report");
        ensure!(a == b, "{mode}: reports differ");
    }
    Ok("identical seeds give byte-identical JSON in both modes".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("rank bound over fuzzed webs", rank_bound),
        ("constant invariant fixture", constant_invariant_fixture),
        ("linear invariant fixture", linear_invariant_fixture),
        ("coordinate web fixture", coordinate_web_fixture),
        ("S-condition identity", s_condition),
        ("cross-ratio law", cross_ratio_law),
        ("derivative oracle", derivative_oracle),
        ("maximality consistency", maximality_consistency),
        ("closedness of scaled forms", closedness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
        failed += outcome.is_err() as usize;
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
