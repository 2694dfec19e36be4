//! Acquisition functions and candidate selection.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::pareto::{hypervolume, pareto_front, rank_by_nds_crowding};
use crate::space::{Configuration, SearchSpace};
use crate::stats::{norm_cdf, norm_pdf};

/// Expected improvement below `best` of `N(mean, std^2)`.
pub fn ei(mean: f64, std: f64, best: f64) -> f64 {
    if std <= 0.0 {
        return (best - mean).max(0.0);
    }
    let z = (best - mean) / std;
    std * (z * norm_cdf(z) + norm_pdf(z))
}

/// `E[max(c - Y, 0)]` for `Y ~ N(mean, std^2)`.
fn partial_expectation(c: f64, mean: f64, std: f64) -> f64 {
    if c == f64::NEG_INFINITY {
        return 0.0;
    }
    if std <= 0.0 {
        return (c - mean).max(0.0);
    }
    let z = (c - mean) / std;
    (c - mean) * norm_cdf(z) + std * norm_pdf(z)
}

/// Non-dominated members of `front` that strictly dominate `reference`.
fn effective_front<P: AsRef<[f64]>>(front: &[P], reference: &[f64]) -> Vec<Vec<f64>> {
    let inside: Vec<Vec<f64>> = front
        .iter()
        .map(|p| p.as_ref().to_vec())
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x < r))
        .collect();
    pareto_front(&inside).into_iter().map(|i| inside[i].clone()).collect()
}

/// Exact expected hypervolume improvement for two objectives with
/// independent Gaussian predictions.
///
/// The non-dominated region below the reference splits into vertical strips
/// between consecutive front points; within a strip the improvement factorizes
/// into a partial expectation per objective.
pub fn ehvi_2d<P: AsRef<[f64]>>(front: &[P], reference: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    assert_eq!(reference.len(), 2, "ehvi_2d is bi-objective");
    let mut pts = effective_front(front, reference);
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let psi1 = |c: f64| partial_expectation(c, mean[0], std[0]);
    let psi2 = |c: f64| partial_expectation(c, mean[1], std[1]);
    let mut total = 0.0;
    let mut left = f64::NEG_INFINITY;
    let mut ceiling = reference[1];
    for p in &pts {
        total += (psi1(p[0]) - psi1(left)) * psi2(ceiling);
        left = p[0];
        ceiling = p[1];
    }
    total += (psi1(reference[0]) - psi1(left)) * psi2(ceiling);
    total.max(0.0)
}

/// Expected hypervolume improvement when objective `expensive` is Gaussian
/// and the remaining objectives are known exactly (`cheap` lists them in
/// order, skipping `expensive`).
///
/// For a fixed cheap part `c`, the improvement of a point at expensive value
/// `t` is the integral from `t` to the reference of `A(s)`, the cheap-space
/// volume above `c` not yet covered by front points whose expensive value is
/// at most `s`. `A` is a step function, so the expectation is a finite sum of
/// partial expectations.
pub fn ms_ehvi<P: AsRef<[f64]>>(
    front: &[P],
    reference: &[f64],
    expensive: usize,
    mean: f64,
    std: f64,
    cheap: &[f64],
) -> f64 {
    let m = reference.len();
    assert!(expensive < m && cheap.len() + 1 == m, "one expensive objective, the rest cheap");
    let cheap_ref: Vec<f64> = (0..m).filter(|&j| j != expensive).map(|j| reference[j]).collect();
    if cheap.iter().zip(&cheap_ref).any(|(c, r)| c >= r) {
        return 0.0;
    }
    let box_volume: f64 = cheap.iter().zip(&cheap_ref).map(|(c, r)| r - c).product();
    let r_e = reference[expensive];
    let mut pts = effective_front(front, reference);
    pts.sort_by(|a, b| a[expensive].total_cmp(&b[expensive]));

    let psi = |c: f64| partial_expectation(c, mean, std);
    let mut total = 0.0;
    let mut covered: Vec<Vec<f64>> = Vec::new();
    let mut level = f64::NEG_INFINITY;
    let mut area = box_volume;
    let mut i = 0;
    while i < pts.len() {
        let next = pts[i][expensive];
        total += area * (psi(next) - psi(level));
        while i < pts.len() && pts[i][expensive] == next {
            let clipped: Vec<f64> = (0..m)
                .filter(|&j| j != expensive)
                .zip(cheap)
                .map(|(j, &c)| pts[i][j].max(c))
                .collect();
            covered.push(clipped);
            i += 1;
        }
        area = (box_volume - hypervolume(&covered, &cheap_ref)).max(0.0);
        level = next;
    }
    total += area * (psi(r_e) - psi(level));
    total.max(0.0)
}

/// Monte Carlo EHVI for any number of objectives. Approximate.
pub fn ehvi_monte_carlo<P: AsRef<[f64]>, R: Rng + ?Sized>(
    front: &[P],
    reference: &[f64],
    mean: &[f64],
    std: &[f64],
    draws: usize,
    rng: &mut R,
) -> f64 {
    let base: Vec<Vec<f64>> = effective_front(front, reference);
    let hv0 = hypervolume(&base, reference);
    let mut with = base.clone();
    with.push(vec![0.0; reference.len()]);
    let mut total = 0.0;
    for _ in 0..draws {
        let last = with.last_mut().expect("sample slot");
        for j in 0..reference.len() {
            let z: f64 = StandardNormal.sample(rng);
            last[j] = mean[j] + std[j] * z;
        }
        total += (hypervolume(&with, reference) - hv0).max(0.0);
    }
    total / draws.max(1) as f64
}

/// Draws used by [`ehvi`] when no closed form exists.
pub const EHVI_MC_DRAWS: usize = 10_000;

/// EHVI: exact for two objectives, Monte Carlo otherwise.
pub fn ehvi<P: AsRef<[f64]>, R: Rng + ?Sized>(
    front: &[P],
    reference: &[f64],
    mean: &[f64],
    std: &[f64],
    rng: &mut R,
) -> f64 {
    if reference.len() == 2 {
        ehvi_2d(front, reference, mean, std)
    } else {
        ehvi_monte_carlo(front, reference, mean, std, EHVI_MC_DRAWS, rng)
    }
}

/// Draws one objective vector per candidate from its independent Gaussian
/// predictive distribution and ranks the draws by front, then crowding
/// distance. Returns the first `n_new` candidate indices in rank order.
pub fn thompson_select<R: Rng + ?Sized>(means: &[Vec<f64>], stds: &[Vec<f64>], n_new: usize, rng: &mut R) -> Vec<usize> {
    let samples: Vec<Vec<f64>> = means
        .iter()
        .zip(stds)
        .map(|(mu, sd)| {
            mu.iter()
                .zip(sd)
                .map(|(&m, &s)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + s.max(0.0) * z
                })
                .collect()
        })
        .collect();
    let mut order = rank_by_nds_crowding(&samples);
    order.truncate(n_new);
    order
}

/// Encoded coordinates held fixed during acquisition optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedCoords {
    pub frozen: Vec<bool>,
    pub values: Vec<f64>,
}

impl FixedCoords {
    fn apply(&self, coords: &mut [f64]) {
        for (i, c) in coords.iter_mut().enumerate() {
            if self.frozen[i] {
                *c = self.values[i];
            }
        }
    }
}

/// Random-pool-plus-local-refinement inner optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionSearch {
    pub pool_size: usize,
    pub refine_steps: usize,
    pub refine_batch: usize,
    pub sigma: f64,
}

impl Default for AcquisitionSearch {
    fn default() -> Self {
        Self { pool_size: 1000, refine_steps: 10, refine_batch: 20, sigma: 0.05 }
    }
}

/// A scored candidate configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub config: Configuration,
    pub score: f64,
}

impl AcquisitionSearch {
    /// Scores `pool_size` uniform samples, then takes `refine_steps` rounds of
    /// `refine_batch` Gaussian perturbations (in the encoding) around the
    /// incumbent. `score` receives configurations with their encodings and
    /// returns one value each; candidates rejected by `allowed` score
    /// `-inf`. Returns `None` when every candidate was rejected.
    pub fn maximize<R, S, A>(
        &self,
        space: &SearchSpace,
        fixed: Option<&FixedCoords>,
        mut allowed: A,
        mut score: S,
        rng: &mut R,
    ) -> Option<Proposal>
    where
        R: Rng + ?Sized,
        S: FnMut(&[Configuration], &[Vec<f64>]) -> Vec<f64>,
        A: FnMut(&Configuration) -> bool,
    {
        let mut best: Option<Proposal> = None;
        let mut consider = |batch: Vec<Configuration>, best: &mut Option<Proposal>| {
            let encoded: Vec<Vec<f64>> = batch.iter().map(|c| space.encode(c).into_inner()).collect();
            let ok: Vec<bool> = batch.iter().map(&mut allowed).collect();
            let values = score(&batch, &encoded);
            for ((config, v), ok) in batch.into_iter().zip(values).zip(ok) {
                let v = if ok && v.is_finite() { v } else { f64::NEG_INFINITY };
                if v > f64::NEG_INFINITY && best.as_ref().is_none_or(|b| v > b.score) {
                    *best = Some(Proposal { config, score: v });
                }
            }
        };

        let pool: Vec<Configuration> = (0..self.pool_size)
            .map(|_| {
                let c = space.sample_uniform(rng);
                match fixed {
                    None => c,
                    Some(f) => {
                        let mut coords = space.encode(&c).into_inner();
                        f.apply(&mut coords);
                        space.decode_coords(&coords).expect("fixed coordinates lie in the cube")
                    }
                }
            })
            .collect();
        consider(pool, &mut best);

        let frozen = fixed.map(|f| f.frozen.as_slice());
        let normal = Normal::new(0.0, self.sigma.max(0.0)).expect("finite sigma");
        for _ in 0..self.refine_steps {
            let Some(incumbent) = best.as_ref().map(|b| space.encode(&b.config).into_inner()) else { break };
            let batch: Vec<Configuration> = (0..self.refine_batch)
                .map(|_| {
                    let coords: Vec<f64> = incumbent
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| {
                            let eta = normal.sample(rng);
                            if frozen.is_some_and(|f| f[i]) {
                                c
                            } else {
                                (c + eta).clamp(0.0, 1.0)
                            }
                        })
                        .collect();
                    space.decode_coords(&coords).expect("clamped coordinates decode")
                })
                .collect();
            consider(batch, &mut best);
        }
        best
    }
}
