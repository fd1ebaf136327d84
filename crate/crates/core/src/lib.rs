//! Simulation and estimation toolkit for optical phase sensing with squeezed
//! vacuum and homodyne detection.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: Gaussian probe state and its quadrature variances.
//! - [`bounds`]: Fisher information, optimal operating phase and the
//!   comparison sensitivity limits (shot noise, NOON, displaced squeezing).
//! - [`sampler`]: seeded generation of homodyne outcomes.
//! - [`estimator`]: grid posterior, closed-form MAP and Monte Carlo summaries.
//! - [`tracker`]: windowed tracking of a time-varying phase, bandpass
//!   filtering and Welch spectra.
//! - [`cli`]: the `sqzphase` experiment harness.
//!
//! Quadrature variances are normalised so that vacuum has variance 1.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod model;
pub mod sampler;
pub mod tracker;

pub use error::{Error, Result};
pub use model::{QuadratureVariances, StateModel};
