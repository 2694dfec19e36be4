use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Job, OptimizerError, Result, RunHistory, Runner};
use crate::acquisition::{ehvi, ms_ehvi, AcquisitionSearch};
use crate::pareto::pareto_front;
use crate::surrogate::{GpConfig, GpModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsEhviParams {
    /// Random evaluations before the first model.
    pub init_size: usize,
    pub pool_size: usize,
    pub refine_steps: usize,
    pub refine_batch: usize,
    pub sigma: f64,
    /// Model every objective, cheap ones included (vanilla EHVI).
    pub vanilla: bool,
    /// Hyperparameters are searched every `refit_every` new observations and
    /// reused in between.
    pub refit_every: usize,
}

impl Default for MsEhviParams {
    fn default() -> Self {
        Self { init_size: 10, pool_size: 500, refine_steps: 10, refine_batch: 20, sigma: 0.05, vanilla: false, refit_every: 10 }
    }
}

impl MsEhviParams {
    pub fn validate(&self) -> Result<()> {
        if self.init_size < 2 || self.pool_size == 0 || self.refit_every == 0 || !(self.sigma >= 0.0) {
            return Err(OptimizerError::Param(format!("MS-EHVI parameters out of range: {self:?}")));
        }
        Ok(())
    }

    pub(crate) fn search(&self) -> AcquisitionSearch {
        AcquisitionSearch {
            pool_size: self.pool_size,
            refine_steps: self.refine_steps,
            refine_batch: self.refine_batch,
            sigma: self.sigma,
        }
    }
}

/// A GP whose hyperparameters are searched only every `every` fits.
pub(crate) struct GpSchedule {
    config: GpConfig,
    every: usize,
    fits: usize,
    hyper: Option<(Vec<f64>, f64)>,
}

impl GpSchedule {
    pub(crate) fn new(every: usize) -> Self {
        Self { config: GpConfig::default(), every: every.max(1), fits: 0, hyper: None }
    }

    pub(crate) fn fit(&mut self, inputs: &[Vec<f64>], targets: &[f64]) -> Option<GpModel> {
        let search = self.fits % self.every == 0 || self.hyper.is_none();
        self.fits += 1;
        let model = match (&self.hyper, search) {
            (Some((ls, noise)), false) => GpModel::fit_fixed(inputs, targets, ls, *noise).ok(),
            _ => None,
        };
        let model = model.or_else(|| GpModel::fit(inputs, targets, &self.config).ok())?;
        self.hyper = Some((model.lengthscales().to_vec(), model.noise()));
        Some(model)
    }
}

/// EHVI-driven Bayesian optimization at the maximum budget. Objectives the
/// benchmark reports as cheap are computed exactly for every candidate and
/// only the rest get a GP; with `vanilla` every objective is modeled.
pub fn run_msehvi(mut runner: Runner<'_>, params: &MsEhviParams, reference: &[f64], seed: u64) -> Result<RunHistory> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bench = runner.bench();
    let space = bench.space();
    let (_, b_max) = bench.budget_range();
    let m = bench.n_objectives();
    let transforms = bench.transforms();

    let probe = space.sample_uniform(&mut rng);
    let cheap_mask: Vec<bool> = match bench.cheap_objectives(&probe) {
        Some(c) if !params.vanilla => c.iter().map(Option::is_some).collect(),
        None if !params.vanilla => return Err(OptimizerError::NoCheapObjectives(bench.name().into())),
        _ => vec![false; m],
    };
    let modeled: Vec<usize> = (0..m).filter(|&j| !cheap_mask[j]).collect();
    if !params.vanilla && modeled.len() != 1 {
        return Err(OptimizerError::Param(format!("MS-EHVI needs exactly one expensive objective, found {}", modeled.len())));
    }

    let mut init = Vec::with_capacity(params.init_size);
    for _ in 0..params.init_size {
        let c = runner.dedup(space.sample_uniform(&mut rng), &init, &mut rng);
        init.push(c);
    }
    runner.evaluate(init.into_iter().map(|c| Job::new(c, b_max)).collect());

    let mut gps: Vec<GpSchedule> = modeled.iter().map(|_| GpSchedule::new(params.refit_every)).collect();
    let search = params.search();
    while !runner.done() {
        let rows: Vec<usize> = (0..runner.evaluations()).collect();
        let (inputs, objectives) = super::training_data(&runner, &rows);
        let models: Option<Vec<GpModel>> = modeled
            .iter()
            .zip(gps.iter_mut())
            .map(|(&j, gp)| gp.fit(&inputs, &objectives.iter().map(|y| y[j]).collect::<Vec<_>>()))
            .collect();
        let front: Vec<Vec<f64>> = pareto_front(&objectives).into_iter().map(|i| objectives[i].clone()).collect();

        let proposal = models.and_then(|models| {
            let score = |configs: &[crate::space::Configuration], encoded: &[Vec<f64>]| -> Vec<f64> {
                configs
                    .iter()
                    .zip(encoded)
                    .map(|(c, x)| {
                        let preds: Vec<(f64, f64)> = models.iter().map(|gp| gp.predict(x)).collect();
                        if params.vanilla {
                            let mean: Vec<f64> = preds.iter().map(|p| p.0).collect();
                            let std: Vec<f64> = preds.iter().map(|p| p.1).collect();
                            let mut mc = ChaCha8Rng::seed_from_u64(0);
                            ehvi(&front, reference, &mean, &std, &mut mc)
                        } else {
                            let cheap: Vec<f64> = bench
                                .cheap_objectives(c)
                                .expect("cheap objectives")
                                .into_iter()
                                .zip(&transforms)
                                .filter_map(|(v, t)| v.map(|v| t.apply(v)))
                                .collect();
                            ms_ehvi(&front, reference, modeled[0], preds[0].0, preds[0].1, &cheap)
                        }
                    })
                    .collect()
            };
            search.maximize(space, None, |c| !runner.seen(c), score, &mut rng)
        });
        let next = match proposal {
            Some(p) => p.config,
            None => runner.dedup(space.sample_uniform(&mut rng), &[], &mut rng),
        };
        runner.evaluate(vec![Job::new(next, b_max)]);
    }
    Ok(runner.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{Benchmark, Dtlz2, Zdt1};
    use crate::optimizers::Stop;

    #[test]
    fn init_only_run_is_random_and_distinct() {
        let bench = Zdt1::default();
        let params = MsEhviParams { init_size: 5, ..MsEhviParams::default() };
        let h = run_msehvi(Runner::new(&bench, Stop::evals(5), 1).unwrap(), &params, &bench.reference_point(), 0).unwrap();
        assert_eq!(h.len(), 5);
    }

    #[test]
    fn never_repeats_a_configuration() {
        let bench = Zdt1::default();
        let params = MsEhviParams { init_size: 4, pool_size: 50, ..MsEhviParams::default() };
        let h = run_msehvi(Runner::new(&bench, Stop::evals(12), 1).unwrap(), &params, &bench.reference_point(), 1).unwrap();
        for (i, a) in h.records().iter().enumerate() {
            assert!(h.records()[..i].iter().all(|b| b.config != a.config));
        }
    }

    #[test]
    fn requires_cheap_objectives() {
        let bench = Dtlz2::new(2, 4);
        let r = run_msehvi(Runner::new(&bench, Stop::evals(5), 1).unwrap(), &MsEhviParams::default(), &bench.reference_point(), 0);
        assert!(matches!(r, Err(OptimizerError::NoCheapObjectives(_))));
    }
}
