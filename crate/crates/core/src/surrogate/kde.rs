//! Products of one-dimensional Gaussian KDEs on `[0, 1]`, and the good/bad
//! pair whose density ratio drives TPE-style proposals.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::stats::{norm_cdf, norm_pdf};

/// Lower bound applied to the bad-set density before dividing.
pub const DENSITY_FLOOR: f64 = 1e-12;

const MIN_BANDWIDTH: f64 = 1e-3;

/// Per-dimension Gaussian KDE, each kernel truncated to `[0, 1]` and
/// renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Kde {
    samples: Vec<Vec<f64>>,
    bandwidths: Vec<f64>,
    // 1 / (Phi((1 - s) / h) - Phi(-s / h)) for each sample and dimension.
    norms: Vec<Vec<f64>>,
}

impl Kde {
    /// Scott's rule `sigma * n^(-1/5)` per dimension, floored at 1e-3 and
    /// multiplied by `bandwidth_factor`.
    pub fn fit(samples: &[Vec<f64>], bandwidth_factor: f64) -> Self {
        assert!(!samples.is_empty(), "KDE needs at least one sample");
        let d = samples[0].len();
        let n = samples.len() as f64;
        let bandwidths: Vec<f64> = (0..d)
            .map(|j| {
                let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
                let sd = crate::stats::sample_std(&col);
                (sd * n.powf(-0.2)).max(MIN_BANDWIDTH) * bandwidth_factor
            })
            .collect();
        let norms = samples
            .iter()
            .map(|s| {
                s.iter()
                    .zip(&bandwidths)
                    .map(|(&c, &h)| 1.0 / (norm_cdf((1.0 - c) / h) - norm_cdf(-c / h)).max(1e-300))
                    .collect()
            })
            .collect();
        Self { samples: samples.to_vec(), bandwidths, norms }
    }

    pub fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// Marginal density of dimension `j` at `x`.
    pub fn density_1d(&self, j: usize, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let h = self.bandwidths[j];
        let total: f64 = self
            .samples
            .iter()
            .zip(&self.norms)
            .map(|(s, z)| norm_pdf((x - s[j]) / h) / h * z[j])
            .sum();
        total / self.samples.len() as f64
    }

    /// Product of the per-dimension marginals.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        (0..self.dim()).map(|j| self.density_1d(j, x[j]).ln()).sum()
    }

    /// Picks a stored sample uniformly and perturbs each coordinate with its
    /// truncated kernel.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let centre = &self.samples[rng.random_range(0..self.samples.len())];
        centre
            .iter()
            .zip(&self.bandwidths)
            .map(|(&c, &h)| loop {
                let z: f64 = StandardNormal.sample(rng);
                let x = c + h * z;
                if (0.0..=1.0).contains(&x) {
                    break x;
                }
            })
            .collect()
    }
}

/// Densities `l` (good configurations) and `g` (the rest).
#[derive(Clone, Debug, PartialEq)]
pub struct KdePair {
    pub good: Kde,
    pub bad: Kde,
}

impl KdePair {
    pub fn fit(good: &[Vec<f64>], bad: &[Vec<f64>], bandwidth_factor: f64) -> Self {
        Self { good: Kde::fit(good, bandwidth_factor), bad: Kde::fit(bad, bandwidth_factor) }
    }

    /// `l(x) / max(g(x), 1e-12)`.
    pub fn ratio(&self, x: &[f64]) -> f64 {
        let g = self.bad.density(x).max(DENSITY_FLOOR);
        self.good.density(x) / g
    }
}
