use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{float_param, int_param, pilot_reference, BenchError, Benchmark, Evaluation};
use crate::fidelity::Budget;
use crate::space::{reference_space, Configuration, SearchSpace, Value};

/// Input geometry and class count for parameter counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CnnShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub classes: usize,
}

impl Default for CnnShape {
    fn default() -> Self {
        Self { height: 16, width: 16, channels: 3, classes: 17 }
    }
}

fn bool_param(space: &SearchSpace, config: &Configuration, name: &str) -> Result<bool, BenchError> {
    space.value(config, name).and_then(Value::as_bool).ok_or_else(|| BenchError::Missing(name.into()))
}

/// Exact trainable-parameter count of the CNN described by `config`.
///
/// Each conv layer is `k x k` with same padding, followed by a 2x2 stride-2
/// max-pool; batch norm adds a scale and shift per filter. The conv output is
/// flattened (or globally average-pooled), then runs through the dense stack
/// and a final classifier.
pub fn cnn_param_count(space: &SearchSpace, config: &Configuration, shape: CnnShape) -> Result<u64, BenchError> {
    let convs = int_param(space, config, "num_conv_layers")? as usize;
    let batch_norm = bool_param(space, config, "batch_norm")?;
    let gap = bool_param(space, config, "global_avg_pool")?;
    let fcs = int_param(space, config, "num_fc_layers")? as usize;

    let (mut h, mut w, mut c) = (shape.height, shape.width, shape.channels as u64);
    let mut total = 0u64;
    for i in 1..=convs {
        let filters = int_param(space, config, &format!("num_filters_{i}"))? as u64;
        let k = int_param(space, config, &format!("kernel_size_{i}"))? as u64;
        total += k * k * c * filters + filters;
        if batch_norm {
            total += 2 * filters;
        }
        c = filters;
        h /= 2;
        w /= 2;
        if h == 0 || w == 0 {
            return Err(BenchError::SpatialCollapse { layer: i, height: shape.height, width: shape.width });
        }
    }
    let mut n_in = if gap { c } else { (h * w) as u64 * c };
    for i in 1..=fcs {
        let n_out = int_param(space, config, &format!("num_neurons_{i}"))? as u64;
        total += n_in * n_out + n_out;
        n_in = n_out;
    }
    Ok(total + n_in * shape.classes as u64 + shape.classes as u64)
}

/// Smooth synthetic stand-in for "(model size, validation error)" over the
/// reference CNN space.
///
/// Objective 0 is `log10` of the exact parameter count and needs no training.
/// Objective 1 is `1 - exp(-s)` with
///
/// ```text
/// s = 0.05 + capacity(p) + 0.06 (log10 lr - lr*(depth))^2
///       + 0.01 (log2 batch - b*)^2 + arch(bn, gap, kernels) + 0.8 / budget
/// ```
///
/// where `p = log10(params)`, `capacity` is an asymmetric parabola around a
/// seeded optimum near `10^5.5` parameters (steep for small models, mild for
/// oversized ones), and the learning-rate optimum drifts lower as the network
/// gets deeper. The benchmark seed jitters the optima.
#[derive(Clone, Debug)]
pub struct NasHpoProxy {
    space: SearchSpace,
    shape: CnnShape,
    b_max: Budget,
    b_min: Budget,
    p_opt: f64,
    lr_opt: f64,
    batch_opt: f64,
    reference: Vec<f64>,
}

impl NasHpoProxy {
    pub fn new(seed: u64, shape: CnnShape) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
        let mut bench = Self {
            space: reference_space(),
            shape,
            b_max: 25,
            b_min: 5,
            p_opt: 5.5 + rng.random_range(-0.25..0.25),
            lr_opt: -2.5 + rng.random_range(-0.25..0.25),
            batch_opt: 5.0 + rng.random_range(-0.5..0.5),
            reference: Vec::new(),
        };
        bench.reference = pilot_reference(&bench, 256, 0);
        bench
    }

    pub fn param_count(&self, config: &Configuration) -> Result<u64, BenchError> {
        cnn_param_count(&self.space, config, self.shape)
    }

    /// The error objective before it is squashed into `(0, 1)`.
    fn score(&self, config: &Configuration, params: u64, budget: Budget) -> Result<f64, BenchError> {
        let p = (params as f64).log10();
        let capacity = if p < self.p_opt { 0.30 * (self.p_opt - p).powi(2) } else { 0.06 * (p - self.p_opt).powi(2) };
        let convs = int_param(&self.space, config, "num_conv_layers")?;
        let fcs = int_param(&self.space, config, "num_fc_layers")?;
        let depth = (convs + fcs) as f64;
        let lr = float_param(&self.space, config, "learning_rate")?.log10();
        let lr_term = 0.06 * (lr - (self.lr_opt - 0.3 * (depth - 2.0))).powi(2);
        let batch = (int_param(&self.space, config, "batch_size")? as f64).log2();
        let batch_term = 0.01 * (batch - self.batch_opt).powi(2);
        let mut arch = 0.0;
        if !bool_param(&self.space, config, "batch_norm")? {
            arch += 0.04;
        }
        if bool_param(&self.space, config, "global_avg_pool")? {
            arch += 0.02;
        }
        for i in 1..=convs {
            let k = int_param(&self.space, config, &format!("kernel_size_{i}"))? as f64;
            arch += 0.01 * ((k - 5.0) / 2.0).powi(2);
        }
        let fidelity = 0.8 / f64::from(budget.max(1));
        Ok(0.05 + capacity + lr_term + batch_term + arch + fidelity)
    }
}

impl Default for NasHpoProxy {
    fn default() -> Self {
        Self::new(0, CnnShape::default())
    }
}

impl Benchmark for NasHpoProxy {
    fn name(&self) -> &str {
        "nas_hpo_proxy"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn objective_names(&self) -> Vec<String> {
        vec!["log10_params".into(), "error".into()]
    }

    fn budget_range(&self) -> (Budget, Budget) {
        (self.b_min, self.b_max)
    }

    fn evaluate(&self, config: &Configuration, budget: Budget) -> Evaluation {
        match self.param_count(config).and_then(|params| Ok((params, self.score(config, params, budget)?))) {
            Ok((params, s)) => Evaluation {
                objectives: vec![(params as f64).log10(), 1.0 - (-s).exp()],
                cost: f64::from(budget) * (0.05 + 2e-8 * params as f64),
                note: None,
            },
            Err(e) => Evaluation { objectives: vec![f64::MAX.log10(), 1.0], cost: 0.0, note: Some(e.to_string()) },
        }
    }

    fn cheap_objectives(&self, config: &Configuration) -> Option<Vec<Option<f64>>> {
        let params = self.param_count(config).ok()?;
        Some(vec![Some((params as f64).log10()), None])
    }

    fn reference_point(&self) -> Vec<f64> {
        self.reference.clone()
    }
}
