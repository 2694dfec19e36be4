use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{float_param, int_param, stable_hash, BenchError, Benchmark, Evaluation, Transform};
use crate::fidelity::Budget;
use crate::mlp::{DenseNet, Targets, TrainSpec};
use crate::space::{Configuration, ParamSpec, Predicate, SearchSpace};

/// Trainable parameters of a dense ReLU net with the given layer widths
/// (input, hidden..., output).
pub fn mlp_param_count(widths: &[usize]) -> u64 {
    widths.windows(2).map(|w| (w[0] * w[1] + w[1]) as u64).sum()
}

/// Seeded 2D classification data: 8 isotropic blobs on a circle of radius
/// 2, blob `k` labelled `k mod 4`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    pub train_x: Vec<Vec<f32>>,
    pub train_y: Vec<usize>,
    pub val_x: Vec<Vec<f32>>,
    pub val_y: Vec<usize>,
    pub classes: usize,
}

impl GaussianMixture {
    pub const BLOBS: usize = 8;
    pub const CLASSES: usize = 4;
    pub const STD: f64 = 0.45;

    pub fn new(seed: u64, n_train: usize, n_val: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| {
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let blob = rng.random_range(0..Self::BLOBS);
                let angle = TAU * blob as f64 / Self::BLOBS as f64;
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                xs.push(vec![(2.0 * angle.cos() + Self::STD * dx) as f32, (2.0 * angle.sin() + Self::STD * dy) as f32]);
                ys.push(blob % Self::CLASSES);
            }
            (xs, ys)
        };
        let (train_x, train_y) = draw(n_train);
        let (val_x, val_y) = draw(n_val);
        Self { train_x, train_y, val_x, val_y, classes: Self::CLASSES }
    }

    /// Same inputs with every training label replaced by a seeded random
    /// class. Anything that only looks at inputs must not notice.
    pub fn with_scrambled_labels(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for y in &mut out.train_y {
            *y = rng.random_range(0..self.classes);
        }
        out
    }
}

/// Real training benchmark: a dense ReLU classifier on [`GaussianMixture`].
///
/// Objectives are the raw parameter count (reported through a `log10`
/// transform) and the validation error after `budget` epochs of Adam. The
/// cost is a FLOP estimate divided by a nominal throughput, so runs with a
/// time limit are reproducible on any machine.
#[derive(Clone, Debug)]
pub struct TinyMlp {
    space: SearchSpace,
    data: GaussianMixture,
    seed: u64,
    b_max: Budget,
}

impl TinyMlp {
    /// Nominal training throughput of the virtual clock, in FLOP/s.
    pub const FLOPS_PER_SECOND: f64 = 1e8;
    /// Fixed per-evaluation overhead in virtual seconds.
    pub const OVERHEAD_S: f64 = 0.05;
    pub const MAX_LAYERS: i64 = 3;

    pub fn new(seed: u64) -> Self {
        Self::with_data(seed, GaussianMixture::new(seed, 1200, 400))
    }

    pub fn with_data(seed: u64, data: GaussianMixture) -> Self {
        Self { space: Self::fc_space(), data, seed, b_max: 25 }
    }

    fn fc_space() -> SearchSpace {
        let mut params = vec![ParamSpec::integer("num_fc_layers", 1, Self::MAX_LAYERS)];
        for i in 1..=Self::MAX_LAYERS {
            params.push(ParamSpec::integer(&format!("num_neurons_{i}"), 2, 512).log().when("num_fc_layers", Predicate::AtLeast(i as f64)));
        }
        params.push(ParamSpec::continuous("learning_rate", 1e-5, 1.0).log());
        params.push(ParamSpec::integer("batch_size", 1, 512).log());
        SearchSpace::new(params).expect("fc space is well formed")
    }

    pub fn data(&self) -> &GaussianMixture {
        &self.data
    }

    /// Layer widths `[2, hidden..., classes]` of the network for `config`.
    pub fn widths(&self, config: &Configuration) -> Result<Vec<usize>, BenchError> {
        let layers = int_param(&self.space, config, "num_fc_layers")?;
        let mut widths = vec![2];
        for i in 1..=layers {
            widths.push(int_param(&self.space, config, &format!("num_neurons_{i}"))? as usize);
        }
        widths.push(self.data.classes);
        Ok(widths)
    }

    /// Writes the hidden widths of `net` into the architectural slots of
    /// `config`, leaving the other hyperparameters alone.
    pub fn with_architecture(&self, config: &Configuration, hidden: &[usize]) -> Result<Configuration, BenchError> {
        if hidden.is_empty() || hidden.len() as i64 > Self::MAX_LAYERS {
            return Err(BenchError::Param(format!("{} hidden layers", hidden.len())));
        }
        let mut out = config.clone();
        let layers = self.space.index_of("num_fc_layers").expect("slot");
        out.set(layers, Some(crate::space::Value::Int(hidden.len() as i64)));
        for i in 1..=Self::MAX_LAYERS as usize {
            let slot = self.space.index_of(&format!("num_neurons_{i}")).expect("slot");
            out.set(slot, hidden.get(i - 1).map(|&w| crate::space::Value::Int(w as i64)));
        }
        self.space.validate(&out).map_err(|e| BenchError::Param(e.to_string()))?;
        Ok(out)
    }

    fn config_seed(&self, config: &Configuration) -> u64 {
        self.seed ^ stable_hash(self.space.config_to_json(config).to_string().as_bytes())
    }

    /// Freshly initialized network for `config`; the initialization depends
    /// only on the benchmark seed and the configuration.
    pub fn fresh_model(&self, config: &Configuration) -> Result<DenseNet<f32>, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config_seed(config));
        DenseNet::new(&self.widths(config)?, &mut rng).map_err(|e| BenchError::Param(e.to_string()))
    }

    /// Virtual seconds needed to train `params` weights for `epochs` epochs
    /// and score them once on the validation set.
    pub fn cost(&self, params: u64, epochs: Budget) -> f64 {
        let p = params as f64;
        let train = f64::from(epochs) * self.data.train_x.len() as f64 * 6.0 * p;
        let validate = self.data.val_x.len() as f64 * 2.0 * p;
        Self::OVERHEAD_S + (train + validate) / Self::FLOPS_PER_SECOND
    }

    /// Trains `net` in place for `budget` epochs with the learning rate and
    /// batch size in `config`, then scores it.
    pub fn train_model(&self, net: &mut DenseNet<f32>, config: &Configuration, budget: Budget) -> Evaluation {
        let params = net.param_count() as u64;
        let cost = self.cost(params, budget);
        let failed = |note: String| Evaluation { objectives: vec![params as f64, 1.0], cost, note: Some(note) };
        let (lr, batch) = match (
            float_param(&self.space, config, "learning_rate"),
            int_param(&self.space, config, "batch_size"),
        ) {
            (Ok(lr), Ok(b)) => (lr, b as usize),
            (Err(e), _) | (_, Err(e)) => return failed(e.to_string()),
        };
        if budget > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config_seed(config).rotate_left(17) ^ u64::from(budget));
            let spec = TrainSpec::new(lr, batch, budget as usize);
            if let Err(e) = net.train(&self.data.train_x, Targets::Classes(&self.data.train_y), &spec, &mut rng) {
                return failed(format!("training diverged: {e}"));
            }
        }
        let error = net.error_rate(&self.data.val_x, &self.data.val_y);
        Evaluation { objectives: vec![params as f64, error], cost, note: None }
    }
}

impl Default for TinyMlp {
    fn default() -> Self {
        Self::new(0)
    }
}

impl Benchmark for TinyMlp {
    fn name(&self) -> &str {
        "tiny_mlp"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn objective_names(&self) -> Vec<String> {
        vec!["params".into(), "error".into()]
    }

    fn budget_range(&self) -> (Budget, Budget) {
        (1, self.b_max)
    }

    fn evaluate(&self, config: &Configuration, budget: Budget) -> Evaluation {
        match self.fresh_model(config) {
            Ok(mut net) => self.train_model(&mut net, config, budget),
            Err(e) => Evaluation { objectives: vec![f64::MAX, 1.0], cost: 0.0, note: Some(e.to_string()) },
        }
    }

    fn cheap_objectives(&self, config: &Configuration) -> Option<Vec<Option<f64>>> {
        let widths = self.widths(config).ok()?;
        Some(vec![Some(mlp_param_count(&widths) as f64), None])
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log10, Transform::Identity]
    }

    /// Analytic: 10% beyond the largest network in the space and beyond
    /// total misclassification.
    fn reference_point(&self) -> Vec<f64> {
        let mut widths = vec![2];
        widths.extend(std::iter::repeat_n(512, Self::MAX_LAYERS as usize));
        widths.push(self.data.classes);
        vec![1.1 * (mlp_param_count(&widths) as f64).log10(), 1.1]
    }
}
