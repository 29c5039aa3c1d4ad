//! Unconstrained-features models for neural collapse: objectives and
//! gradients for the plain and two-layer variants, closed-form global
//! minimizers, gradient-descent driving, the NC metric suite, and ridge
//! attenuation experiments on collapsed features.

pub mod analytic;
pub mod cli;
pub mod dims;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optim;

pub use dims::{build_label_matrix, ProblemDims};
pub use error::{Error, Result};
pub use linalg::Mat;
pub use model::{Activation, Hyperparams, ModelState, Variant};
