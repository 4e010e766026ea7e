//! Harmonic maps from plane domains into the hyperbolic upper half-plane,
//! built from solution pairs of the sinh-Gordon and sine-Gordon equations
//! linked by a Bäcklund transformation, and certified by finite-difference
//! residuals.
//!
//! Module map:
//! - [`kernel`]: Jacobi elliptic functions, elliptic integrals, quadrature, ODE integration.
//! - [`field`]: grids, masked scalar and map fields, finite differences, CSV export.
//! - [`sinh_gordon`]: separable solutions `w = 2 artanh(F(x) G(y))`.
//! - [`backlund`]: θ from a separable `w`, `w` from a one-soliton θ, Bäcklund residuals.
//! - [`map_builder`]: the quadrature, separable and soliton map constructions.
//! - [`verifier`]: harmonicity, Beltrami, Hopf and derivative-identity residuals.
//! - [`family`]: named constructions shared by the command line and the tests.

pub mod backlund;
pub mod error;
pub mod family;
pub mod field;
pub mod kernel;
pub mod map_builder;
pub mod sinh_gordon;
pub mod verifier;

pub use error::{Error, Result};
