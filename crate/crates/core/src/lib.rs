//! Latent-space relevance analysis for small variational autoencoders.
//!
//! The crate generates datasets with known constraint structure (a square,
//! a circle, e+e- and pp dimuon kinematics), trains a dense VAE from scratch,
//! and measures how many latent directions the trained model actually uses.
//!
//! Layout:
//! - [`numerics`]: matrices, seeded RNG, MLP forward/backward, Adam, gradient
//!   checking and a Jacobi eigensolver.
//! - [`vae`]: the model, its loss and the training loop.
//! - [`datagen`]: dataset generators, constraint verification, standardization, CSV.
//! - [`analysis`]: relevance, effective dimensionality, correlations, aggregation.
//! - [`linbase`]: covariance and PCA for the linear autoencoder baseline.
//! - [`experiment`] and [`report`]: multi-seed orchestration, JSON and SVG output.

// `!(x > y)` is used on floats so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod datagen;
mod error;
pub mod experiment;
pub mod linbase;
pub mod numerics;
pub mod report;
pub mod vae;

pub use error::{Error, Result};
