use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Job, OptimizerError, RecordInfo, Result, RunHistory, Runner};
use crate::fidelity::emoash_ladder;
use crate::pareto::{hssp_remove_one, nds, rank_by_nds_crowding};
use crate::space::Configuration;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmoAshaParams {
    pub fe_total: usize,
    /// Population size.
    pub mu: usize,
    /// Number of successive-halving rungs.
    pub n_sh: usize,
    pub tournament_k: usize,
    pub mutate_k: usize,
}

impl Default for EmoAshaParams {
    fn default() -> Self {
        Self { fe_total: 300, mu: 20, n_sh: 3, tournament_k: 3, mutate_k: 5 }
    }
}

impl EmoAshaParams {
    pub fn validate(&self) -> Result<()> {
        if self.fe_total == 0 || self.mu == 0 || self.n_sh == 0 || self.tournament_k == 0 || self.mutate_k == 0 {
            return Err(OptimizerError::Param(format!("EMO-ASHA parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

struct Member {
    config: Configuration,
    objectives: Vec<f64>,
}

/// Picks the fittest of `k` distinct uniformly drawn members. Fitness is the
/// position in the NDS-then-crowding order.
fn tournament<R: Rng + ?Sized>(position: &[usize], k: usize, rng: &mut R) -> usize {
    index::sample(rng, position.len(), k.min(position.len()))
        .into_iter()
        .min_by_key(|&i| (position[i], i))
        .expect("nonempty population")
}

fn positions(pop: &[Member]) -> Vec<usize> {
    let objs: Vec<&[f64]> = pop.iter().map(|m| m.objectives.as_slice()).collect();
    let mut position = vec![0; pop.len()];
    for (p, i) in rank_by_nds_crowding(&objs).into_iter().enumerate() {
        position[i] = p;
    }
    position
}

/// Index of the member to drop: the smallest hypervolume contributor of the
/// last front (lowest index on ties).
pub(crate) fn poorest(objectives: &[&[f64]], reference: &[f64]) -> usize {
    let fronts = nds(objectives).fronts;
    let worst = fronts.last().expect("nonempty population");
    if worst.len() == 1 {
        return worst[0];
    }
    let pts: Vec<&[f64]> = worst.iter().map(|&i| objectives[i]).collect();
    worst[hssp_remove_one(&pts, reference)]
}

/// Steady-state evolutionary search over a doubling-budget ladder. Each
/// rung re-evaluates the population at the rung budget, then spends the rest
/// of its evaluations on children that replace the poorest member.
pub fn run_emoash(mut runner: Runner<'_>, params: &EmoAshaParams, reference: &[f64], seed: u64) -> Result<RunHistory> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bench = runner.bench();
    let space = bench.space();
    let (_, b_max) = bench.budget_range();
    let ladder = emoash_ladder(params.fe_total, b_max, params.n_sh)?;

    let mut pop: Vec<Member> =
        (0..params.mu).map(|_| Member { config: space.sample_uniform(&mut rng), objectives: Vec::new() }).collect();
    'rungs: for (r, rung) in ladder.rungs.iter().enumerate() {
        let jobs = pop.iter().map(|m| Job::new(m.config.clone(), rung.budget).with_info(RecordInfo::rung(r))).collect();
        let ids = runner.evaluate(jobs);
        if ids.len() < pop.len() {
            break;
        }
        for (m, id) in pop.iter_mut().zip(ids) {
            m.objectives = runner.history().records()[id].objectives.clone();
        }
        for _ in 0..rung.evaluations.saturating_sub(params.mu) {
            let position = positions(&pop);
            let a = tournament(&position, params.tournament_k, &mut rng);
            let child = if rng.random_bool(0.5) {
                space.mutate_k(&pop[a].config, params.mutate_k, &mut rng)
            } else {
                let b = tournament(&position, params.tournament_k, &mut rng);
                space.recombine(&pop[a].config, &pop[b].config, &mut rng)
            };
            let Some(&id) = runner.evaluate(vec![Job::new(child.clone(), rung.budget).with_info(RecordInfo::rung(r))]).first()
            else {
                break 'rungs;
            };
            pop.push(Member { config: child, objectives: runner.history().records()[id].objectives.clone() });
            let objs: Vec<&[f64]> = pop.iter().map(|m| m.objectives.as_slice()).collect();
            let drop = poorest(&objs, reference);
            pop.remove(drop);
        }
    }
    Ok(runner.finish())
}
