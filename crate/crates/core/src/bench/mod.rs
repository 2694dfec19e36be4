//! Objective evaluators: analytic test problems, a NAS+HPO proxy over the
//! reference CNN space, and a real tiny-MLP training benchmark.

mod cnn;
mod synthetic;
mod tiny_mlp;

pub use cnn::{cnn_param_count, CnnShape, NasHpoProxy};
pub use synthetic::{Dtlz2, Zdt1};
pub use tiny_mlp::{mlp_param_count, GaussianMixture, TinyMlp};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::Budget;
use crate::space::{Configuration, SearchSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("spatial size reached zero after conv layer {layer} (input {height}x{width})")]
    SpatialCollapse { layer: usize, height: usize, width: usize },
    #[error("configuration is missing `{0}`")]
    Missing(String),
    #[error("invalid benchmark parameter: {0}")]
    Param(String),
}

/// Map applied to a raw objective before optimizers and hypervolume see it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Log10,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log10 => x.log10(),
        }
    }
}

/// Result of one evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Raw objective values, all minimized.
    pub objectives: Vec<f64>,
    /// Deterministic cost in virtual seconds.
    pub cost: f64,
    /// Free-form diagnostic (e.g. a diverged training run).
    pub note: Option<String>,
}

/// A deterministic multi-objective problem over a search space.
pub trait Benchmark: Send + Sync {
    fn name(&self) -> &str;

    fn space(&self) -> &SearchSpace;

    fn objective_names(&self) -> Vec<String>;

    fn n_objectives(&self) -> usize {
        self.objective_names().len()
    }

    /// Smallest and largest meaningful budget.
    fn budget_range(&self) -> (Budget, Budget);

    fn evaluate(&self, config: &Configuration, budget: Budget) -> Evaluation;

    /// Objectives computable without training, as a partial raw vector.
    fn cheap_objectives(&self, _config: &Configuration) -> Option<Vec<Option<f64>>> {
        None
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; self.n_objectives()]
    }

    /// Frozen hypervolume reference point in transformed objective space.
    fn reference_point(&self) -> Vec<f64>;

    fn transform(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(self.transforms()).map(|(&x, t)| t.apply(x)).collect()
    }
}

/// Componentwise worst transformed objective over a seeded random pilot
/// sample at full budget, pushed out by 10% of its magnitude.
pub fn pilot_reference<B: Benchmark + ?Sized>(bench: &B, samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, b_max) = bench.budget_range();
    let mut worst = vec![f64::NEG_INFINITY; bench.n_objectives()];
    for _ in 0..samples {
        let c = bench.space().sample_uniform(&mut rng);
        let y = bench.transform(&bench.evaluate(&c, b_max).objectives);
        for (w, v) in worst.iter_mut().zip(y) {
            *w = w.max(v);
        }
    }
    worst.iter().map(|w| w + 0.1 * w.abs().max(1e-12)).collect()
}

/// FNV-1a; a stable hash for deriving per-configuration seeds.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Looks up an integer parameter by name.
pub(crate) fn int_param(space: &SearchSpace, config: &Configuration, name: &str) -> Result<i64, BenchError> {
    space.value(config, name).and_then(|v| v.as_i64()).ok_or_else(|| BenchError::Missing(name.into()))
}

pub(crate) fn float_param(space: &SearchSpace, config: &Configuration, name: &str) -> Result<f64, BenchError> {
    space.value(config, name).and_then(|v| v.as_f64()).ok_or_else(|| BenchError::Missing(name.into()))
}
