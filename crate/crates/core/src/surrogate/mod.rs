//! Predictive models over unit-cube encodings.

mod ensemble;
mod gp;
mod kde;

pub use ensemble::{EnsembleConfig, EnsemblePredictor};
pub use gp::{GpConfig, GpModel};
pub use kde::{Kde, KdePair, DENSITY_FLOOR};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("need at least {need} training points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("inputs and targets differ in length ({inputs} vs {targets})")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("inputs have inconsistent dimensions")]
    Ragged,
    #[error("non-finite training target")]
    NonFinite,
    #[error("kernel matrix not positive definite even with jitter {0:e}")]
    NotPositiveDefinite(f64),
    #[error("ensemble member failed to train: {0}")]
    Training(String),
}
