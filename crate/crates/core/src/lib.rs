//! Overlapping group lasso solvers built on an augmented Lagrangian splitting.
//!
//! The problem `min_x 1/2 ||Ax - b||^2 + lambda sum_s w_s ||x_s||` with overlapping groups is
//! rewritten over a replicated vector `y = Cx`, where each group owns a contiguous block of
//! `y`. The outer loop updates the multiplier of `Cx = y`; the inner solvers in [`inner`]
//! minimize the augmented Lagrangian approximately.

pub mod datagen;
pub mod inner;
pub mod io;
pub mod linsolve;
pub mod model;
pub mod outer;
pub mod prox;

pub use inner::{Algorithm, InnerOptions, SkipRule, SolveError, SplitContext};
pub use linsolve::LinsolveMode;
pub use model::{GroupStructure, ModelError, Penalty, Problem, ReplicationMap};
pub use outer::{solve, solve_from, MuPolicy, OuterConfig, SolveReport, WarmStart};
