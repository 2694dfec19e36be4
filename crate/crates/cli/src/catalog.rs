use anyhow::{bail, Result};
use mobo_core::bench::{Benchmark, TinyMlp};
use mobo_core::space::{reference_space, unit_box_space, SearchSpace};

use crate::config::BenchmarkSpec;

/// Named search spaces shipped with the library.
pub const SPACE_NAMES: [&str; 3] = ["reference", "tiny_mlp", "unit_box"];

/// Looks up a bundled space. `unit_box` takes its dimension from `dim`.
pub fn space_by_name(name: &str, dim: usize) -> Result<SearchSpace> {
    Ok(match name {
        "reference" => reference_space(),
        "tiny_mlp" => TinyMlp::new(0).space().clone(),
        "unit_box" => unit_box_space(dim),
        _ => bail!("unknown space `{name}` (known: {})", SPACE_NAMES.join(", ")),
    })
}

pub fn list_spaces() -> Result<String> {
    let mut out = String::new();
    for name in SPACE_NAMES {
        let space = space_by_name(name, 6)?;
        let blurb = match name {
            "reference" => "CNN architecture and training hyperparameters (nas_hpo_proxy)",
            "tiny_mlp" => "fully connected widths and training hyperparameters (tiny_mlp)",
            _ => "continuous unit hypercube, dimension set per benchmark (zdt1, dtlz2)",
        };
        let shown = if name == "unit_box" { "d".to_string() } else { space.dim().to_string() };
        out.push_str(&format!("{name:<10} {shown:>3} params  {blurb}\n"));
    }
    Ok(out)
}

/// Pretty JSON of one space, loadable with `SearchSpace::from_json_str`.
pub fn show_space(name: &str, dim: usize) -> Result<String> {
    Ok(serde_json::to_string_pretty(&space_by_name(name, dim)?.to_json())?)
}

/// One line per benchmark with its objectives, budgets and default params.
pub fn list_benchmarks() -> Result<String> {
    let mut out = String::new();
    for name in BenchmarkSpec::NAMES {
        let spec = BenchmarkSpec::default_for(name).expect("listed name");
        let built = spec.build()?;
        let bench = built.as_dyn();
        let (lo, hi) = bench.budget_range();
        let params = serde_json::to_value(&spec)?;
        out.push_str(&format!(
            "{name:<14} objectives [{}]  budgets {lo}..={hi}  defaults {}\n",
            bench.objective_names().join(", "),
            params.get("params").cloned().unwrap_or_default()
        ));
    }
    Ok(out)
}
