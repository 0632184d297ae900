//! Rank analysis of planar Samuelson 4-webs.
//!
//! A web is given by a web function `f(x, y)` and a basic invariant
//! `b(x, y)`, or by a generating function whose coordinate web is taken. The
//! pipeline eliminates the scaling functions from the Samuelson equations,
//! reduces the remaining conditions to linear ODE constraints on one unknown
//! function of `f`, and counts the dimension of their solution space.
//!
//! Modules:
//! - [`expr`]: expression trees, parser, printer, evaluation.
//! - [`calculus`]: symbolic derivatives, web frame, normal forms, zero tests.
//! - [`jets`]: truncated bivariate Taylor arithmetic, used as an independent
//!   derivative oracle.
//! - [`sweb`]: web data, S-condition and cross-ratio checks, the rank
//!   procedure.
//! - [`cli`]: config files, JSON reports, the `sweb` command.

pub mod calculus;
pub mod cli;
pub mod expr;
pub mod jets;
pub mod sweb;

pub use expr::{format, parse, Expr};
