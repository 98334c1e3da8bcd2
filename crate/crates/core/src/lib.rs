//! Ground states of rotating Bose–Einstein condensates by Riemannian conjugate
//! Sobolev-gradient minimization of the Gross–Pitaevskii energy.
//!
//! The crate is organised bottom-up:
//!
//! - [`discretization`]: structured P1 finite elements on `[-L, L]²`, sparse
//!   operators in the real-pair representation of complex fields, and a
//!   Jacobi-preconditioned conjugate-gradient solver.
//! - [`energy`]: the energy functional, its first two derivatives, the
//!   Lagrange multiplier and the energy-adaptive bilinear form `a_u`.
//! - [`gradients`]: Riesz maps, tangent-space projections and Riemannian
//!   Sobolev gradients for the `H¹₀` and `a_u` metrics.
//! - [`optimizer`]: the conjugate-gradient iteration on the L²-unit sphere.
//! - [`verifier`]: first- and second-order optimality certificates.
//! - [`cli`]: configuration, presets, file formats and experiment drivers.

// Element loops index several local arrays at once; `!(x < y)` deliberately
// treats NaN as failure.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discretization;
pub mod energy;
mod error;
pub mod gradients;
pub(crate) mod linalg;
pub mod optimizer;
pub mod verifier;

pub use error::{Error, Result};
