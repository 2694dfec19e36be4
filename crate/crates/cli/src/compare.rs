use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mobo_core::pareto::pareto_front;
use mobo_core::stats::{mean, std_error};
use serde::{Deserialize, Serialize};

use crate::run::{read_hypervolume, read_pareto, ParetoDoc, ParetoPoint};

/// One row of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub mean_hypervolume: f64,
    pub std_error: f64,
    pub n_seeds: usize,
}

/// A point of a combined front, tagged with the seed that found it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedPoint {
    pub seed: u64,
    #[serde(flatten)]
    pub point: ParetoPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedFront {
    pub method: String,
    pub points: Vec<CombinedPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedDoc {
    pub benchmark: String,
    pub objective_names: Vec<String>,
    pub reference_point: Vec<f64>,
    pub fronts: Vec<CombinedFront>,
}

struct Run {
    pareto: ParetoDoc,
    curve: Vec<f64>,
}

/// Aggregates finished run directories into `summary.csv`,
/// `combined_pareto.json` and `hv_curves.csv` under `out`.
///
/// All runs must share a benchmark and reference point. Rows are ordered by
/// mean final hypervolume, best first.
pub fn compare(run_dirs: &[PathBuf], out: &Path) -> Result<Vec<SummaryRow>> {
    ensure!(!run_dirs.is_empty(), "compare needs at least one run directory");
    let mut by_method: BTreeMap<String, Vec<Run>> = BTreeMap::new();
    let mut first: Option<ParetoDoc> = None;
    for dir in run_dirs {
        let pareto = read_pareto(dir)?;
        let curve: Vec<f64> = read_hypervolume(dir)?.into_iter().map(|(_, _, hv)| hv).collect();
        ensure!(!curve.is_empty(), "{} has an empty hypervolume.csv", dir.display());
        if let Some(head) = &first {
            if head.benchmark != pareto.benchmark {
                bail!("mismatched benchmarks: {} vs {} in {}", head.benchmark, pareto.benchmark, dir.display());
            }
            if head.reference_point != pareto.reference_point {
                bail!(
                    "mismatched reference points: {:?} vs {:?} in {}",
                    head.reference_point,
                    pareto.reference_point,
                    dir.display()
                );
            }
        } else {
            first = Some(pareto.clone());
        }
        by_method.entry(pareto.method.clone()).or_default().push(Run { pareto, curve });
    }
    let head = first.expect("at least one run");
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut rows: Vec<SummaryRow> = by_method
        .iter()
        .map(|(method, runs)| {
            let finals: Vec<f64> = runs.iter().map(|r| *r.curve.last().expect("nonempty")).collect();
            SummaryRow {
                method: method.clone(),
                mean_hypervolume: mean(&finals),
                std_error: std_error(&finals),
                n_seeds: finals.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.mean_hypervolume.total_cmp(&a.mean_hypervolume).then_with(|| a.method.cmp(&b.method)));
    let mut w = csv::Writer::from_path(out.join("summary.csv")).context("creating summary.csv")?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;

    let fronts = by_method
        .iter()
        .map(|(method, runs)| {
            let union: Vec<CombinedPoint> = runs
                .iter()
                .flat_map(|r| r.pareto.points.iter().map(|p| CombinedPoint { seed: r.pareto.seed, point: p.clone() }))
                .collect();
            let objectives: Vec<&[f64]> = union.iter().map(|p| p.point.objectives.as_slice()).collect();
            let points = pareto_front(&objectives).into_iter().map(|i| union[i].clone()).collect();
            CombinedFront { method: method.clone(), points }
        })
        .collect();
    let combined = CombinedDoc {
        benchmark: head.benchmark,
        objective_names: head.objective_names,
        reference_point: head.reference_point,
        fronts,
    };
    fs::write(out.join("combined_pareto.json"), serde_json::to_string_pretty(&combined)? + "\n")
        .context("writing combined_pareto.json")?;

    // Evaluation grid; a run that stopped early holds its last value.
    let mut w = csv::Writer::from_path(out.join("hv_curves.csv")).context("creating hv_curves.csv")?;
    w.write_record(["method", "evaluations", "mean_hypervolume", "std_error"])?;
    for (method, runs) in &by_method {
        let longest = runs.iter().map(|r| r.curve.len()).max().unwrap_or(0);
        for n in 1..=longest {
            let at: Vec<f64> = runs.iter().map(|r| r.curve[n.min(r.curve.len()) - 1]).collect();
            w.write_record([method.clone(), n.to_string(), mean(&at).to_string(), std_error(&at).to_string()])?;
        }
    }
    w.flush()?;
    Ok(rows)
}

pub fn read_summary(out: &Path) -> Result<Vec<SummaryRow>> {
    let path = out.join("summary.csv");
    let mut rdr = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    rdr.deserialize().map(|r| r.with_context(|| format!("parsing {}", path.display()))).collect()
}
