//! Numeric substrate: special functions, quadrature and ODE integration.

pub mod ellint;
pub mod jacobi;
pub mod ode;
pub mod quadrature;

pub use ellint::{carlson_rf, complete_elliptic_k, incomplete_elliptic_f, incomplete_elliptic_f_ext};
pub use jacobi::{jacobi_elliptic, EllipticParams, Jacobi};
pub use ode::{ode_integrate, ode_integrate_span, DenseSolution, OdeSpec};
pub use quadrature::{gauss_legendre, pairwise_sum, quad_adaptive, quad_gk, QuadratureSpec};
