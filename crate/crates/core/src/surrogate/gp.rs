//! Gaussian-process regression with a squared-exponential ARD kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::SurrogateError;

/// Hyperparameter search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Isotropic lengthscales tried in the multi-start grid.
    pub lengthscales: Vec<f64>,
    /// Noise variances (on standardized targets) tried in the grid.
    pub noises: Vec<f64>,
    /// Per-dimension refinement passes after the isotropic grid.
    pub ard_passes: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            lengthscales: vec![0.05, 0.1, 0.2, 0.4, 0.8, 1.6],
            noises: vec![1e-8, 1e-6, 1e-4, 1e-2, 1e-1],
            ard_passes: 1,
        }
    }
}

const JITTERS: [f64; 7] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-4];

/// Fitted GP posterior. Immutable after fitting.
#[derive(Clone, Debug)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    lengthscales: Vec<f64>,
    noise: f64,
    jitter: f64,
    y_mean: f64,
    y_scale: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_marginal_likelihood: f64,
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    lml: f64,
}

fn sq_dist_scaled(a: &[f64], b: &[f64], inv_l2: &[f64]) -> f64 {
    a.iter().zip(b).zip(inv_l2).map(|((x, y), w)| (x - y) * (x - y) * w).sum()
}

fn factorize(inputs: &[Vec<f64>], y: &DVector<f64>, lengthscales: &[f64], noise: f64) -> Option<Factorized> {
    let n = inputs.len();
    let inv_l2: Vec<f64> = lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0 + noise;
        for j in 0..i {
            let v = (-0.5 * sq_dist_scaled(&inputs[i], &inputs[j], &inv_l2)).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    for jitter in JITTERS {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = kj.cholesky() {
            let alpha = chol.solve(y);
            let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
            let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            if lml.is_finite() {
                return Some(Factorized { chol, alpha, jitter, lml });
            }
        }
    }
    None
}

impl GpModel {
    /// Fits kernel hyperparameters by maximizing the log marginal likelihood
    /// over an isotropic grid followed by per-dimension halving/doubling.
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], config: &GpConfig) -> Result<Self, SurrogateError> {
        let (y, mean, scale) = Self::prepare(inputs, targets)?;
        let d = inputs[0].len();
        let mut best: Option<(Vec<f64>, f64, Factorized)> = None;
        let consider = |ls: Vec<f64>, noise: f64, best: &mut Option<(Vec<f64>, f64, Factorized)>| {
            if let Some(f) = factorize(inputs, &y, &ls, noise) {
                if best.as_ref().is_none_or(|(_, _, b)| f.lml > b.lml) {
                    *best = Some((ls, noise, f));
                }
            }
        };
        for &l in &config.lengthscales {
            for &noise in &config.noises {
                consider(vec![l; d], noise, &mut best);
            }
        }
        for _ in 0..config.ard_passes {
            for dim in 0..d {
                for factor in [0.5, 2.0] {
                    let Some((ls, noise, _)) = best.as_ref() else { break };
                    let (mut ls, noise) = (ls.clone(), *noise);
                    ls[dim] *= factor;
                    consider(ls, noise, &mut best);
                }
            }
        }
        let (lengthscales, noise, f) = best.ok_or(SurrogateError::NotPositiveDefinite(JITTERS[JITTERS.len() - 1]))?;
        Ok(Self::assemble(inputs, lengthscales, noise, mean, scale, f))
    }

    /// Refits the posterior on new data, keeping the given hyperparameters.
    pub fn fit_fixed(
        inputs: &[Vec<f64>],
        targets: &[f64],
        lengthscales: &[f64],
        noise: f64,
    ) -> Result<Self, SurrogateError> {
        let (y, mean, scale) = Self::prepare(inputs, targets)?;
        let f = factorize(inputs, &y, lengthscales, noise)
            .ok_or(SurrogateError::NotPositiveDefinite(JITTERS[JITTERS.len() - 1]))?;
        Ok(Self::assemble(inputs, lengthscales.to_vec(), noise, mean, scale, f))
    }

    fn prepare(inputs: &[Vec<f64>], targets: &[f64]) -> Result<(DVector<f64>, f64, f64), SurrogateError> {
        if inputs.len() != targets.len() {
            return Err(SurrogateError::LengthMismatch { inputs: inputs.len(), targets: targets.len() });
        }
        if inputs.len() < 2 {
            return Err(SurrogateError::TooFewPoints { need: 2, got: inputs.len() });
        }
        if inputs.iter().any(|x| x.len() != inputs[0].len()) {
            return Err(SurrogateError::Ragged);
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(SurrogateError::NonFinite);
        }
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0);
        let scale = if var.sqrt() > 1e-12 * mean.abs().max(1.0) { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(targets.len(), targets.iter().map(|t| (t - mean) / scale));
        Ok((y, mean, scale))
    }

    fn assemble(inputs: &[Vec<f64>], lengthscales: Vec<f64>, noise: f64, mean: f64, scale: f64, f: Factorized) -> Self {
        Self {
            inputs: inputs.to_vec(),
            lengthscales,
            noise,
            jitter: f.jitter,
            y_mean: mean,
            y_scale: scale,
            chol: f.chol,
            alpha: f.alpha,
            log_marginal_likelihood: f.lml,
        }
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    /// Noise variance on the standardized scale.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    fn kernel_vector(&self, x: &[f64]) -> DVector<f64> {
        let inv_l2: Vec<f64> = self.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| (-0.5 * sq_dist_scaled(x, xi, &inv_l2)).exp()),
        )
    }

    /// Posterior mean and standard deviation of the latent function.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = self.kernel_vector(x);
        let mean = k.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&k).unwrap_or_else(|| DVector::zeros(k.len()));
        let var = (1.0 - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }

    /// Predictions for many points at once.
    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        if xs.is_empty() {
            return Vec::new();
        }
        let n = self.inputs.len();
        let inv_l2: Vec<f64> = self.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut k = DMatrix::<f64>::zeros(n, xs.len());
        for (c, x) in xs.iter().enumerate() {
            for (r, xi) in self.inputs.iter().enumerate() {
                k[(r, c)] = (-0.5 * sq_dist_scaled(x, xi, &inv_l2)).exp();
            }
        }
        let means = k.tr_mul(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&k).unwrap_or_else(|| DMatrix::zeros(n, xs.len()));
        (0..xs.len())
            .map(|c| {
                let var = (1.0 - v.column(c).norm_squared()).max(0.0);
                (self.y_mean + self.y_scale * means[c], self.y_scale * var.sqrt())
            })
            .collect()
    }

    /// Gradient of the posterior mean with respect to the input.
    pub fn mean_gradient(&self, x: &[f64]) -> Vec<f64> {
        let k = self.kernel_vector(x);
        let mut grad = vec![0.0; x.len()];
        for (i, xi) in self.inputs.iter().enumerate() {
            let w = self.alpha[i] * k[i];
            for j in 0..x.len() {
                grad[j] -= w * (x[j] - xi[j]) / (self.lengthscales[j] * self.lengthscales[j]);
            }
        }
        grad.iter_mut().for_each(|g| *g *= self.y_scale);
        grad
    }
}
