//! Simulation and verification kernels for elastic Brownian motion with
//! random restarts from the boundary.
//!
//! The process lives in the closure of a domain `D`. Between restarts it is a
//! reflected Brownian motion (generator `½Δ`) that accumulates boundary local
//! time `L`. Each time `L` crosses an independent `Exp(κ)` level, the path
//! jumps to a fresh point drawn from `μ/κ`, where `μ` is the restart measure and
//! `κ = μ(D)`. The associated Kolmogorov problem is the heat equation with the
//! nonlocal Robin condition
//!
//! ```text
//! ∂ₙu(x) + ∫_D (u(y) − u(x)) μ(dy) = 0,   x ∈ ∂D,
//! ```
//!
//! with `∂ₙ` the inward normal derivative.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure function
//! of its inputs and of explicit random streams; file formats, configuration and
//! the thread pool live in the `elastic-jump` companion crate.
//!
//! Modules:
//!
//! - [`geometry`]: domains with signed distance, projection and inward normal.
//! - [`measures`]: restart measures, quadrature against them, and the Laplace
//!   exponent `Φ(λ) = λ + ∫(1 − e^{−λz}) μ(dz)`.
//! - [`sde`]: the Euler–Skorokhod path simulator and Monte Carlo estimators.
//! - [`spectral`]: Robin eigenbases, the renewal (Volterra) equation for
//!   `c(t) = ∫u(t,y) μ(dy)` and the spectral series for `u`.
//! - [`invariant`]: the Robin Green function on the unit interval and the
//!   invariant density it induces.
//! - [`trace`]: the half-line process and inverse local time exponents. The
//!   Dirichlet-to-Neumann comparison needs an FFT and lives in the companion
//!   crate.
//! - [`escape`]: first-passage experiments in a narrow-neck dumbbell.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod exec;
pub mod geometry;
pub mod measures;
pub mod quad;
pub mod rng;
pub mod stats;

pub mod escape;
pub mod invariant;
pub mod sde;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};

/// The crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use geometry::{DomainSpec, DumbbellParams, Point};
pub use measures::{LaplaceExponent, RestartMeasure};
