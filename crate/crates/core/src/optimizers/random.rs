use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Job, RandomParams, Result, RunHistory, Runner};

/// Uniform sampling at the maximum budget until the stop criterion.
pub fn run_random_search(mut runner: Runner<'_>, params: &RandomParams, seed: u64) -> Result<RunHistory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bench = runner.bench();
    let (_, b_max) = bench.budget_range();
    let batch = params.batch.max(1);
    while !runner.done() {
        let jobs = (0..batch.min(runner.remaining())).map(|_| Job::new(bench.space().sample_uniform(&mut rng), b_max)).collect();
        runner.evaluate(jobs);
    }
    Ok(runner.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Zdt1;
    use crate::optimizers::Stop;

    #[test]
    fn single_eval_and_determinism() {
        let bench = Zdt1::default();
        let one = run_random_search(Runner::new(&bench, Stop::evals(1), 1).unwrap(), &RandomParams::default(), 0).unwrap();
        assert_eq!(one.len(), 1);
        let a = run_random_search(Runner::new(&bench, Stop::evals(20), 1).unwrap(), &RandomParams::default(), 4).unwrap();
        let b = run_random_search(Runner::new(&bench, Stop::evals(20), 3).unwrap(), &RandomParams::default(), 4).unwrap();
        assert_eq!(a, b);
    }
}
