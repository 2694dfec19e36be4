use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mobo_core::bench::{Benchmark, CnnShape, Dtlz2, GaussianMixture, NasHpoProxy, TinyMlp, Zdt1};
use mobo_core::optimizers::{run_bulkcut, run_method, MethodParams, OptimizerError, RunHistory, Stop};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Zdt1Params {
    pub dim: usize,
    pub b_max: u32,
    pub fidelity_bias: f64,
}

impl Default for Zdt1Params {
    fn default() -> Self {
        Self { dim: 6, b_max: 25, fidelity_bias: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dtlz2Params {
    pub objectives: usize,
    pub dim: usize,
}

impl Default for Dtlz2Params {
    fn default() -> Self {
        Self { objectives: 2, dim: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxyParams {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub classes: usize,
}

impl Default for ProxyParams {
    fn default() -> Self {
        let shape = CnnShape::default();
        Self { seed: 0, height: shape.height, width: shape.width, channels: shape.channels, classes: shape.classes }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TinyMlpParams {
    /// Seeds both the data set and the network initializations.
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
}

impl Default for TinyMlpParams {
    fn default() -> Self {
        Self { seed: 0, n_train: 1200, n_val: 400 }
    }
}

/// Benchmark selection, tagged by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum BenchmarkSpec {
    Zdt1(Zdt1Params),
    Dtlz2(Dtlz2Params),
    NasHpoProxy(ProxyParams),
    TinyMlp(TinyMlpParams),
}

impl BenchmarkSpec {
    pub const NAMES: [&'static str; 4] = ["zdt1", "dtlz2", "nas_hpo_proxy", "tiny_mlp"];

    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "zdt1" => Self::Zdt1(Zdt1Params::default()),
            "dtlz2" => Self::Dtlz2(Dtlz2Params::default()),
            "nas_hpo_proxy" => Self::NasHpoProxy(ProxyParams::default()),
            "tiny_mlp" => Self::TinyMlp(TinyMlpParams::default()),
            _ => return None,
        })
    }

    /// Instantiates the benchmark. Pilot-sampled reference points are
    /// computed here, so this can take a moment.
    pub fn build(&self) -> Result<BuiltBenchmark> {
        Ok(match self {
            Self::Zdt1(p) => {
                ensure!(p.dim >= 2, "zdt1 needs dim >= 2, got {}", p.dim);
                ensure!(p.b_max >= 1, "zdt1 needs b_max >= 1");
                ensure!(p.fidelity_bias >= 0.0, "zdt1 fidelity_bias must be non-negative");
                BuiltBenchmark::Zdt1(Zdt1::new(p.dim, p.b_max, p.fidelity_bias))
            }
            Self::Dtlz2(p) => {
                ensure!(p.objectives >= 2 && p.dim >= p.objectives, "dtlz2 needs objectives >= 2 and dim >= objectives");
                BuiltBenchmark::Dtlz2(Dtlz2::new(p.objectives, p.dim))
            }
            Self::NasHpoProxy(p) => {
                ensure!(p.height > 0 && p.width > 0 && p.channels > 0 && p.classes > 1, "degenerate input shape");
                let shape = CnnShape { height: p.height, width: p.width, channels: p.channels, classes: p.classes };
                BuiltBenchmark::Proxy(NasHpoProxy::new(p.seed, shape))
            }
            Self::TinyMlp(p) => {
                ensure!(p.n_train > 0 && p.n_val > 0, "tiny_mlp needs training and validation points");
                BuiltBenchmark::TinyMlp(TinyMlp::with_data(p.seed, GaussianMixture::new(p.seed, p.n_train, p.n_val)))
            }
        })
    }
}

pub enum BuiltBenchmark {
    Zdt1(Zdt1),
    Dtlz2(Dtlz2),
    Proxy(NasHpoProxy),
    TinyMlp(TinyMlp),
}

impl BuiltBenchmark {
    pub fn as_dyn(&self) -> &dyn Benchmark {
        match self {
            Self::Zdt1(b) => b,
            Self::Dtlz2(b) => b,
            Self::Proxy(b) => b,
            Self::TinyMlp(b) => b,
        }
    }

    /// Runs `method`, routing BULK&CUT to the benchmarks that support
    /// morphisms.
    pub fn run(
        &self,
        method: &MethodParams,
        reference: &[f64],
        stop: Stop,
        seed: u64,
        workers: usize,
    ) -> std::result::Result<RunHistory, OptimizerError> {
        let MethodParams::BulkCut(params) = method else {
            return run_method(method, self.as_dyn(), reference, stop, seed, workers);
        };
        match self {
            Self::Zdt1(b) => run_bulkcut(b, stop, workers, params, seed),
            Self::Proxy(b) => run_bulkcut(b, stop, workers, params, seed),
            Self::TinyMlp(b) => run_bulkcut(b, stop, workers, params, seed),
            Self::Dtlz2(b) => Err(OptimizerError::Unsupported { bench: b.name().into(), method: "bulk_cut".into() }),
        }
    }
}

/// One seeded run, as read from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkSpec,
    pub method: MethodParams,
    #[serde(default)]
    pub seed: u64,
    pub stop: Stop,
    /// Replaces the benchmark's own reference point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(benchmark: BenchmarkSpec, method: MethodParams, stop: Stop) -> Self {
        Self { benchmark, method, seed: 0, stop, reference_point: None, output_dir: None }
    }

    /// Parses a config document. `params` may be omitted for the benchmark
    /// and the method, which then use their defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        for key in ["benchmark", "method"] {
            let Some(section) = doc.get_mut(key) else { continue };
            match section {
                Value::String(name) => *section = serde_json::json!({ "name": name.clone(), "params": {} }),
                Value::Object(map) if !map.contains_key("params") => {
                    map.insert("params".into(), Value::Object(Default::default()));
                }
                _ => {}
            }
        }
        if let Some(name) = doc.pointer("/benchmark/name").and_then(Value::as_str) {
            if BenchmarkSpec::default_for(name).is_none() {
                bail!("unknown benchmark `{name}` (known: {})", BenchmarkSpec::NAMES.join(", "));
            }
        }
        if let Some(name) = doc.pointer("/method/name").and_then(Value::as_str) {
            if MethodParams::default_for(name).is_none() {
                bail!("unknown method `{name}` (known: {})", MethodParams::NAMES.join(", "));
            }
        }
        let config: Self = serde_json::from_value(doc).context("invalid experiment config")?;
        config.stop.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
