//! Generators shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sweb_core::calculus::{Domain, SamplePlan};
use sweb_core::expr::{parse, Expr, Func};
use sweb_core::sweb::{from_generating_function, SwebError, WebSpec};

pub fn p(text: &str) -> Expr {
    parse(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::x()),
        Just(Expr::y()),
        (-9i64..=9, 1i64..=5).prop_map(|(n, d)| Expr::ratio(n, d)),
    ]
}

/// W-free trees of depth at most 8 over every node kind.
pub fn any_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(8, 48, 2, |inner| {
        let func = prop_oneof![
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Sqrt)
        ];
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::pow(a, b)),
            (inner.clone(), -3i64..=4).prop_map(|(a, n)| Expr::powi(a, n)),
            inner.clone().prop_map(Expr::neg),
            (func, inner).prop_map(|(f, a)| Expr::call(f, a)),
        ]
    })
}

/// Rational functions of `x, y`: no calls, integer exponents only.
pub fn rational_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(6, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), -2i64..=3).prop_map(|(a, n)| Expr::powi(a, n)),
            inner.prop_map(Expr::neg),
        ]
    })
}

/// Polynomial `Σ c_ij x^i y^j` of total degree at most `deg` with positive
/// rational coefficients; `forced` monomials always appear.
pub fn random_poly(rng: &mut ChaCha8Rng, deg: u32, forced: &[(u32, u32)]) -> String {
    let mut terms = Vec::new();
    for i in 0..=deg {
        for j in 0..=deg - i {
            if forced.contains(&(i, j)) || rng.gen_bool(0.35) {
                let (n, d) = (rng.gen_range(1..=4), rng.gen_range(1..=3));
                terms.push(format!("{n}/{d}*x^{i}*y^{j}"));
            }
        }
    }
    if terms.is_empty() {
        terms.push("1".into());
    }
    terms.join(" + ")
}

/// Positive coefficients keep `f_x, f_y` positive and `b > 1` on `[1,2]²`;
/// half of the invariants are quotients.
pub fn random_web(rng: &mut ChaCha8Rng, domain: &Domain, plan: &SamplePlan) -> Result<WebSpec, SwebError> {
    let f = random_poly(rng, 3, &[(1, 0), (0, 1)]);
    let b = if rng.gen_bool(0.5) {
        format!("2 + {}", random_poly(rng, 3, &[]))
    } else {
        format!("1 + (1 + {})/({})", random_poly(rng, 3, &[]), random_poly(rng, 2, &[(0, 0)]))
    };
    WebSpec::new(p(&f), p(&b), domain.clone(), plan.clone())
}

/// Coordinate web of a degree-4 generating function with a forced
/// `x y` term.
pub fn random_coordinate_web(
    rng: &mut ChaCha8Rng,
    domain: &Domain,
    plan: &SamplePlan,
) -> Result<WebSpec, SwebError> {
    let phi = random_poly(rng, 4, &[(2, 0), (1, 1), (0, 2)]);
    from_generating_function(p(&phi), domain.clone(), plan.clone())
}

/// Smooth expressions on `[1,2]²` used as a derivative corpus.
pub const CORPUS: [&str; 20] = [
    "x*y + x^2",
    "x^3*y - 2*y^2 + 1/3",
    "(x + y)/(x - y + 3)",
    "exp(x*y)",
    "log(x + y^2)",
    "sin(x)*cos(y)",
    "sqrt(x^2 + y)",
    "x^y",
    "exp(-x)/(1 + y^2)",
    "(x*y - 1)^3",
    "x/(y^2 + x^2)",
    "log(x)*y^3",
    "cos(x*y) + x^4",
    "(2*x + y)^(-2)",
    "exp(x)*sin(y) - y/x",
    "x^5 - 3*x^2*y^3 + y^5",
    "sqrt(x)*sqrt(y)*exp(x - y)",
    "1/(x*y)",
    "(x^2 + 1)/(y^3 + 2)",
    "sin(x + 2*y)^2",
];

/// Rational members of [`CORPUS`].
pub fn rational_corpus() -> Vec<&'static str> {
    CORPUS
        .iter()
        .copied()
        .filter(|t| p(t).is_rational())
        .collect()
}
