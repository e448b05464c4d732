//! First-order solvers for composite problems `min_{x∈X} f(x) + 𝒳(x)` where
//! `f` is smooth but possibly nonconvex and `𝒳` is a simple convex term.
//!
//! The same methods handle convex and nonconvex `f` without being told which
//! case applies. Gradient-type solvers live in [`accel`], bundle-level solvers
//! in [`level`], and random problem generators in [`testbed`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod error;
pub mod problem;
pub mod prox;
pub mod level;
pub mod testbed;
pub mod trace;

pub use error::{Error, Result};
pub use problem::{
    eval_gradient, eval_objective, finite_diff_gradient, gamma_sequence, CompositeProblem,
    CompositeTerm, Evaluation, Evaluator, FeasibleSet, FnOracle, GammaSequence, HalfSquaredNorm,
    Point, SmoothOracle,
};
pub use trace::{Crossing, IterRecord, RunTrace, StoppingRule, Termination};
