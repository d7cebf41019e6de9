//! Proximal point method for minimizing `f = max_i f_i` over Hadamard manifolds.
//!
//! The components `f_i` are continuously differentiable but `f` is generally
//! nonsmooth and nonconvex. The crate provides:
//!
//! * [`manifold`]: exponential/logarithm maps, distance, inner product and
//!   parallel transport on Euclidean space, the positive half-line with metric
//!   `g(x) = x^-2`, and the cone of symmetric positive definite matrices with
//!   the affine-invariant metric.
//! * [`objective`]: max-type objectives, active sets, directional derivatives
//!   and the convex hull of active gradients used as the subdifferential.
//! * [`prox`]: the outer proximal iteration, its strongly convex subproblem
//!   solver, step-parameter validation and KKT certificates.
//! * [`diagnostics`]: randomized probes of the geometric and calculus facts
//!   the method relies on.
//! * [`problems`]: the two built-in benchmark problems.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
mod error;
pub mod linalg;
pub mod manifold;
mod math;
pub mod objective;
pub mod problems;
pub mod prox;
pub mod qp;

pub use error::{Error, Result};
pub use manifold::{ManifoldKind, ManifoldPoint, TangentVector};
pub use objective::{Component, FnComponent, HullElement, MaxObjective};
pub use prox::{
    Certificate, InnerConfig, InnerMethod, IterationRecord, LambdaRule, LevelSetSpec, ProxConfig, ProxRun, Region,
    RunOutcome, Verdict,
};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
