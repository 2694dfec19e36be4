use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use mobo_core::bench::Benchmark;
use mobo_core::optimizers::RunHistory;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

/// Environment variable naming the root for default output directories.
pub const OUTPUT_ROOT_VAR: &str = "MOBO_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

/// Command-line overrides for a run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: None, out: None, workers: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub evaluations: usize,
    pub final_hypervolume: f64,
    pub wall_time_s: f64,
}

/// One point of `pareto.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub eval_id: usize,
    pub budget: u32,
    /// Transformed objectives, the space the hypervolume is measured in.
    pub objectives: Vec<f64>,
    pub raw_objectives: Vec<f64>,
    pub config: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoDoc {
    pub benchmark: String,
    pub method: String,
    pub seed: u64,
    pub objective_names: Vec<String>,
    pub reference_point: Vec<f64>,
    pub points: Vec<ParetoPoint>,
}

/// Runs one experiment and writes its artifacts. Flags override the seed
/// and output directory of the config.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    ensure!(opts.workers >= 1, "--workers must be at least 1");
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let built = config.benchmark.build()?;
    let bench = built.as_dyn();
    let reference = config.reference_point.clone().unwrap_or_else(|| bench.reference_point());
    ensure!(
        reference.len() == bench.n_objectives(),
        "reference point has {} coordinates, {} has {} objectives",
        reference.len(),
        bench.name(),
        bench.n_objectives()
    );
    let dir = opts.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| {
        output_root().join(format!("{}_{}_seed{}", bench.name(), config.method.name(), config.seed))
    });
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;

    let history = built.run(&config.method, &reference, config.stop, config.seed, opts.workers)?;

    config.reference_point = Some(reference.clone());
    config.output_dir = Some(dir.clone());
    fs::write(dir.join("config.json"), config.to_json_pretty() + "\n").context("writing config.json")?;
    write_history(&dir.join("history.csv"), bench, &history)?;
    let curve = write_hypervolume(&dir.join("hypervolume.csv"), &history, &reference)?;
    write_pareto(&dir.join("pareto.json"), bench, &config, &history, &reference)?;
    write_events(&dir.join("events.jsonl"), &history)?;

    Ok(RunOutcome {
        dir,
        evaluations: history.len(),
        final_hypervolume: curve.last().copied().unwrap_or(0.0),
        wall_time_s: history.records().last().map_or(0.0, |r| r.wall_time_s),
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn write_history(path: &Path, bench: &dyn Benchmark, history: &RunHistory) -> Result<()> {
    let mut w = csv_writer(path)?;
    let m = bench.n_objectives();
    let mut header = vec!["eval_id".to_string(), "budget".into(), "wall_time_s".into()];
    header.extend((0..m).map(|j| format!("obj_{j}")));
    header.push("config_json".into());
    w.write_record(&header)?;
    for r in history.records() {
        let mut row = vec![r.eval_id.to_string(), r.budget.to_string(), r.wall_time_s.to_string()];
        row.extend(r.objectives.iter().map(f64::to_string));
        row.push(bench.space().config_to_json(&r.config).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_hypervolume(path: &Path, history: &RunHistory, reference: &[f64]) -> Result<Vec<f64>> {
    let curve = history.hypervolume_curve(reference);
    let mut w = csv_writer(path)?;
    w.write_record(["wall_time_s", "evaluations", "hypervolume"])?;
    for (i, (r, hv)) in history.records().iter().zip(&curve).enumerate() {
        w.write_record([r.wall_time_s.to_string(), (i + 1).to_string(), hv.to_string()])?;
    }
    w.flush()?;
    Ok(curve)
}

fn write_pareto(
    path: &Path,
    bench: &dyn Benchmark,
    config: &ExperimentConfig,
    history: &RunHistory,
    reference: &[f64],
) -> Result<()> {
    let points = history
        .final_front()
        .into_iter()
        .map(|i| {
            let r = &history.records()[i];
            ParetoPoint {
                eval_id: r.eval_id,
                budget: r.budget,
                objectives: r.objectives.clone(),
                raw_objectives: r.raw.clone(),
                config: bench.space().config_to_json(&r.config),
            }
        })
        .collect();
    let doc = ParetoDoc {
        benchmark: bench.name().to_string(),
        method: config.method.name().to_string(),
        seed: config.seed,
        objective_names: bench.objective_names(),
        reference_point: reference.to_vec(),
        points,
    };
    fs::write(path, serde_json::to_string_pretty(&doc)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_events(path: &Path, history: &RunHistory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in history.records() {
        let mut event = json!({
            "eval_id": r.eval_id,
            "budget": r.budget,
            "cost": r.cost,
            "raw_objectives": r.raw,
        });
        if let Value::Object(info) = serde_json::to_value(&r.info)? {
            event.as_object_mut().expect("object").extend(info);
        }
        writeln!(w, "{event}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pareto(dir: &Path) -> Result<ParetoDoc> {
    let path = dir.join("pareto.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Rows of `hypervolume.csv` as `(wall_time_s, evaluations, hypervolume)`.
pub fn read_hypervolume(dir: &Path) -> Result<Vec<(f64, usize, f64)>> {
    let path = dir.join("hypervolume.csv");
    let mut rdr = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    rdr.deserialize().map(|row| row.with_context(|| format!("parsing {}", path.display()))).collect()
}
