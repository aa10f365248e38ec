//! Geometry of systems of higher-order ordinary differential equations.
//!
//! A system of `(k+1)`-order ODEs `x^(k+1)/(k+1)! + G(x, y^(1), …, y^(k)) = 0`
//! is presented as a semispray of order `k` on the jet bundle. From it the
//! crate derives the canonical nonlinear connection, the curvature
//! components of the Jacobi endomorphism, dynamical covariant derivatives,
//! symmetry residuals, and Wuenschmann-type invariants, all symbolically,
//! and integrates geodesics and Jacobi fields numerically.

pub mod expr;
pub mod matrix;
pub mod semispray;
pub mod connection;
pub mod curvature;
pub mod covariant;
pub mod numeric;
pub mod riemann;
pub mod invariants;
pub mod check;
