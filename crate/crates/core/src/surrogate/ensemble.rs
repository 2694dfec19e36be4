//! Ensemble of small dense regressors; the spread across members serves as
//! the predictive uncertainty.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SurrogateError;
use crate::mlp::{DenseNet, Targets, TrainSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub members: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { members: 5, hidden: vec![64, 64], epochs: 200, learning_rate: 1e-3, batch_size: 32 }
    }
}

/// Members are trained in `f32`; inputs and outputs are `f64`.
#[derive(Clone, Debug)]
pub struct EnsemblePredictor {
    members: Vec<DenseNet<f32>>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl EnsemblePredictor {
    /// Trains every member on standardized targets with its own seed
    /// (`seed + member index`).
    pub fn fit(
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        config: &EnsembleConfig,
        seed: u64,
    ) -> Result<Self, SurrogateError> {
        if inputs.len() != targets.len() {
            return Err(SurrogateError::LengthMismatch { inputs: inputs.len(), targets: targets.len() });
        }
        if inputs.is_empty() {
            return Err(SurrogateError::TooFewPoints { need: 1, got: 0 });
        }
        if config.members < 2 {
            return Err(SurrogateError::TooFewPoints { need: 2, got: config.members });
        }
        if targets.iter().flatten().any(|t| !t.is_finite()) {
            return Err(SurrogateError::NonFinite);
        }
        let m = targets[0].len();
        let (mut means, mut scales) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for j in 0..m {
            let col: Vec<f64> = targets.iter().map(|t| t[j]).collect();
            let sd = crate::stats::sample_std(&col);
            means.push(crate::stats::mean(&col));
            scales.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        let x: Vec<Vec<f32>> = inputs.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
        let y: Vec<Vec<f32>> = targets
            .iter()
            .map(|t| t.iter().enumerate().map(|(j, &v)| ((v - means[j]) / scales[j]) as f32).collect())
            .collect();
        let mut widths = vec![inputs[0].len()];
        widths.extend(&config.hidden);
        widths.push(m);
        let spec = TrainSpec::new(config.learning_rate, config.batch_size, config.epochs);
        let members = (0..config.members)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let mut net = DenseNet::<f32>::new(&widths, &mut rng).map_err(|e| SurrogateError::Training(e.to_string()))?;
                net.train(&x, Targets::Values(&y), &spec, &mut rng).map_err(|e| SurrogateError::Training(e.to_string()))?;
                Ok(net)
            })
            .collect::<Result<Vec<_>, SurrogateError>>()?;
        Ok(Self { members, means, scales })
    }

    pub fn members(&self) -> &[DenseNet<f32>] {
        &self.members
    }

    /// Per-objective mean and unbiased standard deviation across members.
    pub fn predict(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let outs: Vec<Vec<f32>> = self.members.iter().map(|net| net.forward(&xf)).collect();
        let m = self.means.len();
        let mut mean = vec![0.0; m];
        let mut std = vec![0.0; m];
        for j in 0..m {
            let col: Vec<f64> = outs.iter().map(|o| o[j] as f64 * self.scales[j] + self.means[j]).collect();
            mean[j] = crate::stats::mean(&col);
            std[j] = crate::stats::sample_std(&col);
        }
        (mean, std)
    }
}
