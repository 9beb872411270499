//! Separable kernel-expansion surrogates for airfoil surface-pressure
//! fields, with a multi-fidelity delta-learning pipeline, B-spline geometry
//! parameterization, field post-processing, an MLP baseline, and a
//! cross-validation evaluation harness.

pub mod error;
pub mod eval;
pub mod fields;
pub mod geometry;
pub mod mfpipe;
pub mod mlp;
pub mod model;
pub mod splines;
pub mod train;

pub use error::{Error, Result};
