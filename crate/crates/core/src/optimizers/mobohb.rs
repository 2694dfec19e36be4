use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Job, OptimizerError, RecordInfo, Result, RunHistory, Runner};
use crate::fidelity::{hb_brackets, sh_promote, Budget};
use crate::pareto::select_by_nds_hssp;
use crate::space::Configuration;
use crate::surrogate::KdePair;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoBohbParams {
    pub b_min: Budget,
    pub b_max: Budget,
    pub eta: u32,
    /// Fraction of purely random proposals.
    pub rho: f64,
    /// Quantile of observations treated as good.
    pub gamma: f64,
    /// Candidates drawn from the good density per proposal.
    pub n_samples: usize,
    /// Minimum model size; `2 * dim + 1` when absent.
    pub n_min: Option<usize>,
    /// Multiplier on Scott's-rule bandwidths; above 1 widens the search.
    pub bandwidth_factor: f64,
}

impl Default for MoBohbParams {
    fn default() -> Self {
        Self { b_min: 5, b_max: 25, eta: 3, rho: 1.0 / 6.0, gamma: 0.1, n_samples: 24, n_min: None, bandwidth_factor: 2.0 }
    }
}

impl MoBohbParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.b_min >= 1
            && self.b_min <= self.b_max
            && self.eta >= 2
            && (0.0..=1.0).contains(&self.rho)
            && self.gamma > 0.0
            && self.gamma <= 1.0
            && self.n_samples > 0
            && self.bandwidth_factor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(OptimizerError::Param(format!("MO-BOHB parameters out of range: {self:?}")))
        }
    }
}

/// Size of the good set among `n` observations.
pub fn good_count(n: usize, gamma: f64, n_min: usize) -> usize {
    n_min.max((gamma * n as f64).floor() as usize)
}

fn propose<R: Rng + ?Sized>(
    runner: &Runner<'_>,
    params: &MoBohbParams,
    n_min: usize,
    reference: &[f64],
    pending: &[Configuration],
    rng: &mut R,
) -> Configuration {
    let space = runner.bench().space();
    let random = |rng: &mut R| runner.dedup(space.sample_uniform(rng), pending, rng);
    if rng.random::<f64>() < params.rho {
        return random(rng);
    }
    let records = runner.history().records();
    let mut budgets: Vec<Budget> = records.iter().map(|r| r.budget).collect();
    budgets.sort_unstable();
    budgets.dedup();
    let level = budgets
        .into_iter()
        .rev()
        .find(|&b| records.iter().filter(|r| r.budget == b).count() >= n_min + 2);
    let Some(level) = level else {
        return random(rng);
    };
    let obs: Vec<usize> = (0..records.len()).filter(|&i| records[i].budget == level).collect();
    let objectives: Vec<&[f64]> = obs.iter().map(|&i| records[i].objectives.as_slice()).collect();
    let n_good = good_count(obs.len(), params.gamma, n_min).min(obs.len() - 1);
    let good_local = select_by_nds_hssp(&objectives, n_good, reference);
    let mut is_good = vec![false; obs.len()];
    for &g in &good_local {
        is_good[g] = true;
    }
    let encode = |keep: bool| -> Vec<Vec<f64>> {
        obs.iter()
            .zip(&is_good)
            .filter(|(_, &g)| g == keep)
            .map(|(&i, _)| space.encode(&records[i].config).into_inner())
            .collect()
    };
    let kde = KdePair::fit(&encode(true), &encode(false), params.bandwidth_factor);

    let mut best: Option<(f64, Configuration)> = None;
    for _ in 0..params.n_samples {
        let x = kde.good.sample(rng);
        let Ok(config) = space.decode_coords(&x) else { continue };
        if runner.seen(&config) || pending.contains(&config) {
            continue;
        }
        let ratio = kde.ratio(&x);
        if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            best = Some((ratio, config));
        }
    }
    best.map_or_else(|| random(rng), |(_, c)| c)
}

/// Hyperband brackets whose configurations come from a good/bad density
/// ratio, with multi-objective promotion inside each bracket.
pub fn run_mobohb(mut runner: Runner<'_>, params: &MoBohbParams, reference: &[f64], seed: u64) -> Result<RunHistory> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bench = runner.bench();
    let (_, bench_max) = bench.budget_range();
    let b_max = params.b_max.min(bench_max);
    let b_min = params.b_min.min(b_max);
    let brackets = hb_brackets(b_min, b_max, params.eta)?;
    let n_min = params.n_min.unwrap_or(2 * bench.space().dim() + 1);

    while !runner.done() {
        for bracket in &brackets {
            let mut configs: Vec<Configuration> = Vec::with_capacity(bracket.n_configs);
            for _ in 0..bracket.n_configs {
                let c = propose(&runner, params, n_min, reference, &configs, &mut rng);
                configs.push(c);
            }
            let budgets = bracket.rung_budgets(b_max, params.eta);
            for (r, &budget) in budgets.iter().enumerate() {
                let jobs = configs.iter().map(|c| Job::new(c.clone(), budget).with_info(RecordInfo::rung(r))).collect();
                let ids = runner.evaluate(jobs);
                if ids.len() < configs.len() {
                    return Ok(runner.finish());
                }
                if r + 1 == budgets.len() {
                    break;
                }
                let objs: Vec<&[f64]> = ids.iter().map(|&i| runner.history().records()[i].objectives.as_slice()).collect();
                configs = sh_promote(&objs, params.eta, reference).into_iter().map(|k| configs[k].clone()).collect();
            }
        }
    }
    Ok(runner.finish())
}
