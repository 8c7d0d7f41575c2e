//! Simulation and analysis of CARMA processes driven by compound-Poisson
//! noise with periodically stationary increments.
//!
//! - [`measure`]: periodic intensity, counting process and subordinator.
//! - [`carma`]: state-space model, matrix exponential, path simulators.
//! - [`moments`]: closed-form periodic mean and covariance.
//! - [`diagnostics`]: spectral coherence and periodic-correlation detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carma;
pub mod diagnostics;
pub mod error;
pub mod measure;
pub mod moments;
mod quad;
pub mod rng;

pub use error::{Error, Result};
