//! Numerical laboratory for the lower tail of the least singular value of
//! sparse complex Gaussian matrices.
//!
//! The crate is split along the objects that appear in the tail argument:
//!
//! - [`ensemble`]: seedable sampling of masks, Gaussian matrices, the sparse
//!   product ensemble and the corner-zeroed shift construction.
//! - [`spectral`]: extreme singular values, kernel vectors and distances to
//!   column spans.
//! - [`sphere`]: band masses, the HC/MC/IC partition of the unit sphere and the
//!   sparse-net approximation pipeline with its certificates.
//! - [`bounds`]: closed-form probability bounds and the two constant-selection
//!   procedures.
//! - [`experiments`]: Monte Carlo harnesses that put the bounds against
//!   sampled matrices.
//!
//! Trials run on rayon when the `parallel` feature is enabled (the default);
//! every experiment is serial-equivalent because each trial draws from its own
//! keyed random stream.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod ensemble;
mod error;
pub mod exec;
pub mod experiments;
pub mod matrix;
pub mod rng;
pub mod spectral;
pub mod sphere;
pub mod stats;
pub mod vector;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, C64};
