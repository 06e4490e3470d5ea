//! Projection methods for variational inequalities `VI(C, A)`: find `x* ∈ C`
//! with `⟨A(x*), x − x*⟩ ≥ 0` for all `x ∈ C`.
//!
//! The main method is a two-step inertial Tseng iteration whose step is the
//! smaller of a self-adaptive and an Armijo step; see [`solvers::Method::Alg3`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod problems;
pub mod solvers;
pub mod stepsize;

pub use error::{Result, ViError};
pub use geometry::{residual, FeasibleSet, Vector};
pub use problems::{builtin, OperatorSpec, VIProblem};
pub use solvers::{solve, solve_with_history, Method, RunReport, SolverParams, StopReason, StoppingRule};
