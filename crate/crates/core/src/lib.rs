//! Rational approximation of a prior spectral density under filter-bank
//! covariance constraints, with the Alpha divergence family as the
//! distance and convex duality as the solution method.
//!
//! The pieces, bottom-up:
//!
//! * [`spectra`]: grids on the unit circle, grid-sampled spectra, and the
//!   divergences between them.
//! * [`filterbank`]: `G(z) = (zI - A)^{-1} B`, the covariance operator
//!   `Gamma`, its range and the feasibility test for a target `Sigma`.
//! * [`dual`]: optimal primal forms, the dual functional with its gradient
//!   and Hessian, and a damped Newton solver over `Range Gamma` for
//!   `nu = 1`, integer `nu > 1` and `nu = inf`.
//! * [`estimation`]: ARMA simulation and sample estimates of `Sigma`.
//! * [`problem`]: JSON request/response types tying the above together.
//! * [`reproduce`]: the built-in regression instances and their checks.

pub mod dual;
pub mod error;
pub mod estimation;
pub mod filterbank;
pub mod instances;
pub mod linalg;
pub mod problem;
pub mod reproduce;
pub mod spectra;

pub use error::{Error, Result};
pub use nalgebra;
