//! A small neural-network engine: dense layers, ReLU, batch normalization,
//! spectral normalization, exact reverse-mode gradients and full-batch Adam.
//!
//! Only what the dependence estimator needs. Gradients are derived by hand
//! for the fixed block structure instead of through a general tape.

mod adam;
mod mlp;
mod spectral;

pub use adam::{AdamConfig, AdamState, Direction};
pub use mlp::{BatchNorm, BatchNormConfig, Dense, ForwardCache, Mlp, MlpGrads, MlpSpec};
pub use spectral::{power_iteration, spectral_normalize, SIGMA_FLOOR};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
}
