use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Job, OptimizerError, RecordInfo, Result, RunHistory, Runner};
use crate::acquisition::thompson_select;
use crate::fidelity::{sh_promote, Budget};
use crate::pareto::rank_by_nds_crowding;
use crate::space::Configuration;
use crate::surrogate::{EnsembleConfig, EnsemblePredictor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoBananasParams {
    pub init_size: usize,
    /// Parents taken from the top of the NDS/crowding order.
    pub n_mut: usize,
    pub mutations_per_parent: usize,
    /// Standard deviation of the encoded-space mutation noise.
    pub sigma: f64,
    /// Candidates chosen by Thompson sampling per iteration.
    pub n_new: usize,
    /// Filter the chosen candidates through a `b/4, b/2, b` halving ladder.
    pub sh_enabled: bool,
    pub ensemble: EnsembleConfig,
}

impl Default for MoBananasParams {
    fn default() -> Self {
        Self {
            init_size: 20,
            n_mut: 10,
            mutations_per_parent: 5,
            sigma: 0.15,
            n_new: 5,
            sh_enabled: false,
            ensemble: EnsembleConfig { members: 5, hidden: vec![32, 32], epochs: 60, learning_rate: 3e-3, batch_size: 32 },
        }
    }
}

impl MoBananasParams {
    pub fn validate(&self) -> Result<()> {
        if self.init_size < 5 || self.n_mut == 0 || self.mutations_per_parent == 0 || self.n_new == 0 || !(self.sigma >= 0.0) {
            return Err(OptimizerError::Param(format!("MO-BANANAS parameters out of range: {self:?}")));
        }
        Ok(())
    }
}

/// Rung budgets `b/4, b/2, b`, dropping repeats for tiny maxima.
fn ladder(b_max: Budget) -> Vec<Budget> {
    let mut rungs: Vec<Budget> = [b_max / 4, b_max / 2, b_max].into_iter().map(|b| b.max(1)).collect();
    rungs.dedup();
    rungs
}

/// Neural-ensemble BO: mutate the best evaluated configurations, predict
/// the mutants with the ensemble and pick the next batch by Thompson
/// sampling over the predicted fronts.
pub fn run_mobananas(mut runner: Runner<'_>, params: &MoBananasParams, reference: &[f64], seed: u64) -> Result<RunHistory> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bench = runner.bench();
    let space = bench.space();
    let (_, b_max) = bench.budget_range();

    let mut init: Vec<Configuration> = Vec::new();
    for _ in 0..params.init_size {
        let c = runner.dedup(space.sample_uniform(&mut rng), &init, &mut rng);
        init.push(c);
    }
    let mut population: Vec<usize> = runner.evaluate(init.into_iter().map(|c| Job::new(c, b_max)).collect());

    let mut iteration = 0u64;
    while !runner.done() {
        iteration += 1;
        let (inputs, objectives) = super::training_data(&runner, &population);
        let Ok(model) = EnsemblePredictor::fit(&inputs, &objectives, &params.ensemble, seed ^ iteration.wrapping_mul(0x9e37_79b9)) else {
            break;
        };
        let parents: Vec<usize> =
            rank_by_nds_crowding(&objectives).into_iter().take(params.n_mut).map(|k| population[k]).collect();
        let mut mutants: Vec<Configuration> = Vec::new();
        for &p in &parents {
            let parent = runner.history().records()[p].config.clone();
            for _ in 0..params.mutations_per_parent {
                let child = space.gaussian_perturb(&parent, params.sigma, &mut rng);
                let child = runner.dedup(child, &mutants, &mut rng);
                mutants.push(child);
            }
        }
        let (means, stds): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
            mutants.iter().map(|c| model.predict(&space.encode(c).into_inner())).unzip();
        let mut chosen: Vec<Configuration> =
            thompson_select(&means, &stds, params.n_new, &mut rng).into_iter().map(|k| mutants[k].clone()).collect();

        if !params.sh_enabled {
            population.extend(runner.evaluate(chosen.into_iter().map(|c| Job::new(c, b_max)).collect()));
            continue;
        }
        let rungs = ladder(b_max);
        for (r, &budget) in rungs.iter().enumerate() {
            let jobs = chosen.iter().map(|c| Job::new(c.clone(), budget).with_info(RecordInfo::rung(r))).collect();
            let ids = runner.evaluate(jobs);
            if ids.len() < chosen.len() {
                break;
            }
            if r + 1 == rungs.len() {
                population.extend(ids);
                break;
            }
            let objs: Vec<&[f64]> = ids.iter().map(|&i| runner.history().records()[i].objectives.as_slice()).collect();
            chosen = sh_promote(&objs, 2, reference).into_iter().map(|k| chosen[k].clone()).collect();
        }
    }
    Ok(runner.finish())
}
