//! Exact symbolic certifier and numerical verifier for power-weight
//! Korn-Hardy inequalities on the plane.
//!
//! The crate is split along the lines of the machinery it checks:
//!
//! - [`poly`]: exact multivariate polynomials over the rationals and the
//!   `log|x|` / `p(x)|x|^{-s}` closed forms of derivatives of the
//!   fundamental solution.
//! - [`linalg`]: exact rational matrices, row reduction and inconsistency
//!   certificates.
//! - [`opsym`]: constant-coefficient operators by their symbols, with
//!   ellipticity, canceling and cocanceling checks.
//! - [`greens`]: formal calculus of derivatives of the Laplace fundamental
//!   solution in harmonic normal form, and Green's matrices.
//! - [`cert`]: one-shot certification of the identities behind the
//!   first-order cancellation lemma.
//! - [`c6solver`]: the exact linear feasibility problem for the composite
//!   `T(x)P(y)`, with rank factorization of solutions.
//! - [`numverify`]: polar-grid quadrature checks of the weighted
//!   inequalities.
//! - [`presets`] and [`driver`]: operator bundles, the operator document
//!   format, subcommands and run reports.

pub mod c6solver;
pub mod cert;
pub mod driver;
pub mod greens;
pub mod linalg;
pub mod numverify;
pub mod opsym;
pub mod poly;
pub mod presets;
pub mod rational;

pub use rational::{q, qi, Rational};
