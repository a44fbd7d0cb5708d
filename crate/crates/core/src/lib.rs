//! Panel-data econometrics and random-forest importance testing.
//!
//! The crate fits static panel regressions ([`linear`]), one-step System
//! GMM ([`gmm`]) and regression random forests ([`forest`]) on the same
//! entity-by-year datasets ([`dataset`]), then ranks and significance-tests
//! predictor importance with sequential permutation tests ([`vimp`]). The
//! [`report`] module lays the results out side by side.

pub mod dataset;
pub mod error;
pub mod forest;
pub mod gmm;
pub mod inference;
mod linalg;
pub mod linear;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod vimp;

pub use error::{Error, Result};
