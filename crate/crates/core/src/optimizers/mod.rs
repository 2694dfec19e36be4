//! Search methods as run loops over a [`Benchmark`].
//!
//! Every method records into a [`RunHistory`] through a [`Runner`], which
//! owns the stop criterion, the virtual clock and the worker pool. Batches
//! are evaluated concurrently but committed in candidate order, and the clock
//! advances by the sum of evaluation costs, so a run is identical for any
//! number of workers.

mod bulkcut;
mod emoash;
mod mobananas;
mod mobohb;
mod msehvi;
mod random;

pub use bulkcut::{paretsilon_greedy, run_bulkcut, BulkCutParams, Morphable, Origin};
pub use emoash::{run_emoash, EmoAshaParams};
pub use mobananas::{run_mobananas, MoBananasParams};
pub use mobohb::{good_count, run_mobohb, MoBohbParams};
pub use msehvi::{run_msehvi, MsEhviParams};
pub use random::run_random_search;

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{Benchmark, Evaluation};
use crate::fidelity::Budget;
use crate::pareto::{dominates_unchecked, hypervolume, pareto_front};
use crate::space::Configuration;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("stop criterion needs a maximum number of evaluations or a time limit")]
    NoStop,
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("benchmark `{0}` has no cheap objectives")]
    NoCheapObjectives(String),
    #[error("benchmark `{bench}` does not support {method}")]
    Unsupported { bench: String, method: String },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Fidelity(#[from] crate::fidelity::FidelityError),
}

pub type Result<T> = std::result::Result<T, OptimizerError>;

/// When a run ends. At least one limit must be set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stop {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    /// Limit on the virtual clock, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time_s: Option<f64>,
}

impl Stop {
    pub fn evals(n: usize) -> Self {
        Self { max_evals: Some(n), max_time_s: None }
    }

    pub fn seconds(s: f64) -> Self {
        Self { max_evals: None, max_time_s: Some(s) }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.max_evals, self.max_time_s) {
            (None, None) => Err(OptimizerError::NoStop),
            (_, Some(t)) if !(t > 0.0) => Err(OptimizerError::Param(format!("max_time_s = {t}"))),
            _ => Ok(()),
        }
    }
}

/// Method-specific provenance of a record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordInfo {
    /// BULK&CUT phase (1, 2 or 3).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<u8>,
    /// Index of the fidelity rung within its ladder.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rung: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RecordInfo {
    pub fn phase(phase: u8) -> Self {
        Self { phase: Some(phase), ..Self::default() }
    }

    pub fn rung(rung: usize) -> Self {
        Self { rung: Some(rung), ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub eval_id: usize,
    pub config: Configuration,
    pub budget: Budget,
    /// Objectives after the benchmark's transforms.
    pub objectives: Vec<f64>,
    pub raw: Vec<f64>,
    pub cost: f64,
    /// Virtual clock after this evaluation.
    pub wall_time_s: f64,
    pub info: RecordInfo,
}

/// Append-only log of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunHistory {
    records: Vec<Record>,
}

impl RunHistory {
    pub fn from_records(records: Vec<Record>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Indices of the non-dominated records after keeping, for every
    /// configuration, only its highest-budget evaluation (the latest one on
    /// ties).
    pub fn final_front(&self) -> Vec<usize> {
        let mut best: Vec<usize> = Vec::new();
        let mut slot: std::collections::HashMap<&Configuration, usize> = std::collections::HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            match slot.get(&r.config) {
                Some(&k) if self.records[best[k]].budget > r.budget => {}
                Some(&k) => best[k] = i,
                None => {
                    slot.insert(&r.config, best.len());
                    best.push(i);
                }
            }
        }
        best.sort_unstable();
        let points: Vec<&[f64]> = best.iter().map(|&i| self.records[i].objectives.as_slice()).collect();
        pareto_front(&points).into_iter().map(|k| best[k]).collect()
    }

    /// Hypervolume of all evaluations so far, after each evaluation.
    /// Non-decreasing by construction.
    pub fn hypervolume_curve(&self, reference: &[f64]) -> Vec<f64> {
        let mut archive: Vec<Vec<f64>> = Vec::new();
        let mut hv = 0.0;
        let mut curve = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let y = &r.objectives;
            let inside = y.iter().zip(reference).all(|(a, b)| a < b);
            if inside && !archive.iter().any(|a| a == y || dominates_unchecked(a, y)) {
                archive.retain(|a| !dominates_unchecked(y, a));
                archive.push(y.clone());
                hv = hypervolume(&archive, reference);
            }
            curve.push(hv);
        }
        curve
    }

    pub fn final_hypervolume(&self, reference: &[f64]) -> f64 {
        self.hypervolume_curve(reference).last().copied().unwrap_or(0.0)
    }

    /// Hypervolume after the first `n` evaluations.
    pub fn hypervolume_at(&self, n: usize, reference: &[f64]) -> f64 {
        Self { records: self.records[..n.min(self.len())].to_vec() }.final_hypervolume(reference)
    }
}

/// A pending evaluation.
#[derive(Clone, Debug)]
pub struct Job {
    pub config: Configuration,
    pub budget: Budget,
    pub info: RecordInfo,
}

impl Job {
    pub fn new(config: Configuration, budget: Budget) -> Self {
        Self { config, budget, info: RecordInfo::default() }
    }

    pub fn with_info(mut self, info: RecordInfo) -> Self {
        self.info = info;
        self
    }
}

/// Evaluation driver shared by all methods.
pub struct Runner<'a> {
    bench: &'a dyn Benchmark,
    stop: Stop,
    pool: Option<rayon::ThreadPool>,
    history: RunHistory,
    clock: f64,
    seen: HashSet<Configuration>,
}

impl<'a> Runner<'a> {
    pub fn new(bench: &'a dyn Benchmark, stop: Stop, workers: usize) -> Result<Self> {
        stop.validate()?;
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| OptimizerError::Pool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self { bench, stop, pool, history: RunHistory::default(), clock: 0.0, seen: HashSet::new() })
    }

    pub fn bench(&self) -> &'a dyn Benchmark {
        self.bench
    }

    pub fn stop(&self) -> Stop {
        self.stop
    }

    pub fn history(&self) -> &RunHistory {
        &self.history
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn evaluations(&self) -> usize {
        self.history.len()
    }

    pub fn done(&self) -> bool {
        self.stop.max_evals.is_some_and(|n| self.history.len() >= n)
            || self.stop.max_time_s.is_some_and(|t| self.clock >= t)
    }

    /// Evaluations left before the count limit, if there is one.
    pub fn remaining(&self) -> usize {
        self.stop.max_evals.map_or(usize::MAX, |n| n.saturating_sub(self.history.len()))
    }

    /// Fraction of the stop budget used: virtual time when a time limit is
    /// set, evaluation count otherwise.
    pub fn progress(&self) -> f64 {
        match (self.stop.max_time_s, self.stop.max_evals) {
            (Some(t), _) => self.clock / t,
            (None, Some(n)) => self.history.len() as f64 / n as f64,
            (None, None) => 0.0,
        }
    }

    pub fn seen(&self, config: &Configuration) -> bool {
        self.seen.contains(config)
    }

    /// Evaluates with the benchmark. Returns the ids of the committed
    /// records, a prefix of `jobs`.
    pub fn evaluate(&mut self, jobs: Vec<Job>) -> Vec<usize> {
        let bench = self.bench;
        self.evaluate_with(jobs, |job| (bench.evaluate(&job.config, job.budget), ())).into_iter().map(|(id, _)| id).collect()
    }

    /// Like [`evaluate`](Self::evaluate) with a custom evaluation that also
    /// returns a by-product (e.g. a trained model).
    pub fn evaluate_with<T, F>(&mut self, mut jobs: Vec<Job>, f: F) -> Vec<(usize, T)>
    where
        T: Send,
        F: Fn(&Job) -> (Evaluation, T) + Sync,
    {
        jobs.truncate(self.remaining());
        if self.done() || jobs.is_empty() {
            return Vec::new();
        }
        let results: Vec<(Evaluation, T)> = match &self.pool {
            Some(pool) if jobs.len() > 1 => pool.install(|| jobs.par_iter().map(&f).collect()),
            _ => jobs.iter().map(&f).collect(),
        };
        let mut committed = Vec::new();
        for (job, (eval, extra)) in jobs.into_iter().zip(results) {
            if self.done() {
                break;
            }
            let id = self.commit(job, eval);
            committed.push((id, extra));
        }
        committed
    }

    fn commit(&mut self, job: Job, eval: Evaluation) -> usize {
        self.clock += eval.cost;
        let id = self.history.len();
        let mut info = job.info;
        if info.note.is_none() {
            info.note = eval.note;
        }
        self.seen.insert(job.config.clone());
        self.history.records.push(Record {
            eval_id: id,
            objectives: self.bench.transform(&eval.objectives),
            raw: eval.objectives,
            config: job.config,
            budget: job.budget,
            cost: eval.cost,
            wall_time_s: self.clock,
            info,
        });
        id
    }

    /// `candidate` if it was never evaluated, else a fresh uniform sample
    /// that was not (falling back to `candidate` after many collisions).
    pub fn dedup<R: Rng + ?Sized>(&self, candidate: Configuration, pending: &[Configuration], rng: &mut R) -> Configuration {
        let taken = |c: &Configuration| self.seen(c) || pending.contains(c);
        if !taken(&candidate) {
            return candidate;
        }
        for _ in 0..1000 {
            let c = self.bench.space().sample_uniform(rng);
            if !taken(&c) {
                return c;
            }
        }
        candidate
    }

    pub fn finish(self) -> RunHistory {
        self.history
    }
}

/// Parameters of every method, tagged by method name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum MethodParams {
    Random(RandomParams),
    EmoAsha(EmoAshaParams),
    MoBohb(MoBohbParams),
    MsEhvi(MsEhviParams),
    MoBananas(MoBananasParams),
    BulkCut(BulkCutParams),
}

impl MethodParams {
    pub const NAMES: [&'static str; 6] = ["random", "emo_asha", "mo_bohb", "ms_ehvi", "mo_bananas", "bulk_cut"];

    /// Default parameters for a method name.
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "random" => Self::Random(RandomParams::default()),
            "emo_asha" => Self::EmoAsha(EmoAshaParams::default()),
            "mo_bohb" => Self::MoBohb(MoBohbParams::default()),
            "ms_ehvi" => Self::MsEhvi(MsEhviParams::default()),
            "mo_bananas" => Self::MoBananas(MoBananasParams::default()),
            "bulk_cut" => Self::BulkCut(BulkCutParams::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Random(_) => "random",
            Self::EmoAsha(_) => "emo_asha",
            Self::MoBohb(_) => "mo_bohb",
            Self::MsEhvi(_) => "ms_ehvi",
            Self::MoBananas(_) => "mo_bananas",
            Self::BulkCut(_) => "bulk_cut",
        }
    }
}

/// Random search has no tuning knobs; candidates are drawn in batches of
/// `batch` to keep workers busy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomParams {
    pub batch: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self { batch: 8 }
    }
}

/// Runs any method except BULK&CUT, which needs a [`Morphable`] benchmark.
pub fn run_method(
    method: &MethodParams,
    bench: &dyn Benchmark,
    reference: &[f64],
    stop: Stop,
    seed: u64,
    workers: usize,
) -> Result<RunHistory> {
    let runner = Runner::new(bench, stop, workers)?;
    match method {
        MethodParams::Random(p) => run_random_search(runner, p, seed),
        MethodParams::EmoAsha(p) => run_emoash(runner, p, reference, seed),
        MethodParams::MoBohb(p) => run_mobohb(runner, p, reference, seed),
        MethodParams::MsEhvi(p) => run_msehvi(runner, p, reference, seed),
        MethodParams::MoBananas(p) => run_mobananas(runner, p, reference, seed),
        MethodParams::BulkCut(_) => Err(OptimizerError::Unsupported {
            bench: bench.name().to_string(),
            method: "bulk_cut without a morphable model".into(),
        }),
    }
}

/// Rows of `history` as encoded inputs and transformed objectives.
pub(crate) fn training_data(runner: &Runner<'_>, rows: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let space = runner.bench().space();
    let records = runner.history().records();
    rows.iter().map(|&i| (space.encode(&records[i].config).into_inner(), records[i].objectives.clone())).unzip()
}
