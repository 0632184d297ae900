//! Samuelson 4-webs: web data and form-level checks, the s′-relation, the
//! reduction to linear constraints on `w`, and the rank computation.
//!
//! A web is normalized as `ω1 = -f_x dx`, `ω2 = -f_y dy`, `ω3 = df`,
//! `ω4 = f_x dx + b f_y dy`. The Samuelson equations ask for scalings
//! `e^σ1, e^σ2, e^τ1, e^τ2` making all four forms closed with
//! `σ1 + τ1 = σ2 + τ2`. Their general solution has
//! `σ1 = -log|f_x| + s1(x)`, `σ2 = -log|f_y| + s2(y)`, `τ1 = w(f)`, and the
//! rank is the dimension of the space of admissible `(s1, s2, w)`.

mod closedness;
mod local;
mod rank;
mod relation;
mod system;
mod web;

use thiserror::Error;

use crate::calculus::CalcError;

pub use closedness::{closedness_residual, reconstruct_singular_ansatz, SolutionAnsatz};
pub use rank::{
    check_maximal, compute_rank, w_dimension, Condition, MaximalityReport, RankReport,
    SystemSummary, WDimension,
};
pub use relation::{
    classify_branch, classify_pivot, compute_delta, compute_h, compute_pivot,
    derive_sprime_relation, Branch,
    BranchDecision, SPrimeRelation,
};
pub use system::{
    derive_generic_system, derive_singular_system, ConstraintSystem, SystemKind,
};
pub use web::{cross_ratio, from_generating_function, verify_s_condition, FormQuadruple, WebSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwebError {
    #[error("degenerate web: {0}")]
    DegenerateWeb(String),
    #[error("mixed branch: {0}")]
    MixedBranch(String),
    #[error("two of the four directions coincide")]
    RepeatedDirection,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

impl SwebError {
    fn from_calc(e: CalcError) -> SwebError {
        match e {
            CalcError::DegenerateWeb(m) => SwebError::DegenerateWeb(m),
            other => SwebError::Calc(other),
        }
    }
}
