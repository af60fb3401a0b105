//! Experiment runner for elastic Brownian motion with random boundary restarts.
//!
//! The numerical kernels live in [`elastic_jump_core`]; this crate adds the
//! FFT half-plane operator, a rayon executor, the configuration format and the
//! report writers used by the `elastic-jump` binary.

pub mod config;
pub mod dtn;
pub mod experiments;
pub mod output;
pub mod par;

pub use elastic_jump_core as core;
