//! Dense numerics used by the rest of the crate.
//!
//! Everything is `f64` and row-major. Nothing here is generic over element
//! type or backend; the datasets involved are a few thousand rows wide at most.

mod adam;
mod eigen;
mod gradcheck;
mod matrix;
mod mlp;
mod rng;

pub use adam::AdamState;
pub use eigen::{jacobi_eigen, SymEigen};
pub use gradcheck::{finite_diff_check, GradCheck, ParamSet, FD_STEP};
pub use matrix::Matrix;
pub use mlp::{Activation, ForwardCache, Layer, LayerGrad, MlpGrads, MlpParams};
pub use rng::Rng;
