use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::msehvi::GpSchedule;
use super::{Job, OptimizerError, RecordInfo, Result, RunHistory, Runner, Stop};
use crate::acquisition::{ei, AcquisitionSearch, FixedCoords};
use crate::bench::{cnn_param_count, Benchmark, Evaluation, NasHpoProxy, TinyMlp, Zdt1};
use crate::fidelity::Budget;
use crate::mlp::{distill, insert_layer_identity, insert_positions, prune_units, pruned_width, DenseNet, TrainSpec};
use crate::pareto::pareto_front;
use crate::space::{canonical, Configuration, Value};

/// How a child's model comes about.
#[derive(Clone, Debug)]
pub enum Origin<M> {
    /// Initialized from scratch.
    Fresh,
    /// Function-preserving enlargement of the parent's trained model.
    Grown(M),
    /// Pruned copy of `teacher`, still to be distilled.
    Shrunk { student: M, teacher: M },
}

/// A benchmark whose architectures can be enlarged and shrunk while
/// carrying a trained model along.
pub trait Morphable: Benchmark {
    type Model: Clone + Send + Sync;

    /// Slots that describe the architecture; BO leaves them alone.
    fn architecture_mask(&self) -> Vec<bool>;

    /// The size measure grow and shrink move strictly.
    fn size(&self, config: &Configuration) -> f64;

    /// A strictly larger child, or `None` if no enlargement applies.
    fn grow<R: Rng + ?Sized>(&self, parent: &Configuration, model: &Self::Model, rng: &mut R)
        -> Option<(Configuration, Self::Model)>;

    /// A strictly smaller child keeping about `keep_fraction` of the units of
    /// one layer, or `None` if nothing can be pruned.
    fn shrink<R: Rng + ?Sized>(
        &self,
        parent: &Configuration,
        model: &Self::Model,
        keep_fraction: f64,
        rng: &mut R,
    ) -> Option<(Configuration, Self::Model)>;

    /// Trains (or distills) and scores the child.
    fn realize(&self, config: &Configuration, origin: Origin<Self::Model>, budget: Budget) -> (Evaluation, Self::Model);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BulkCutParams {
    /// Phase boundaries as fractions of the stop budget.
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Probability of descending past the current front in parent selection.
    pub epsilon: f64,
    pub keep_fractions: Vec<f64>,
    /// Parent draws before giving up on a morphism and sampling afresh.
    pub max_redraws: usize,
    pub refit_every: usize,
    pub pool_size: usize,
    pub refine_steps: usize,
}

impl Default for BulkCutParams {
    fn default() -> Self {
        Self {
            t1: 0.2,
            t2: 0.6,
            t3: 1.0,
            epsilon: 0.2,
            keep_fractions: vec![0.5, 0.625, 0.75, 0.875],
            max_redraws: 20,
            refit_every: 10,
            pool_size: 200,
            refine_steps: 5,
        }
    }
}

impl BulkCutParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.t1 && self.t1 < self.t2 && self.t2 < self.t3) {
            return Err(OptimizerError::Param(format!("need 0 <= T1 < T2 < T3, got {} {} {}", self.t1, self.t2, self.t3)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(OptimizerError::Param(format!("epsilon = {}", self.epsilon)));
        }
        if self.keep_fractions.is_empty() || self.keep_fractions.iter().any(|k| !(*k > 0.0 && *k < 1.0)) {
            return Err(OptimizerError::Param(format!("keep fractions {:?}", self.keep_fractions)));
        }
        if self.refit_every == 0 || self.pool_size == 0 {
            return Err(OptimizerError::Param("refit_every and pool_size must be positive".into()));
        }
        Ok(())
    }
}

/// Parent selection: with probability `1 - epsilon` draw uniformly from the
/// current front, otherwise peel it off and repeat on the rest. The last
/// remaining front is always drawn from.
pub fn paretsilon_greedy<P: AsRef<[f64]>, R: Rng + ?Sized>(population: &[P], epsilon: f64, rng: &mut R) -> usize {
    assert!(!population.is_empty(), "empty population");
    let mut remaining: Vec<usize> = (0..population.len()).collect();
    loop {
        let pts: Vec<&[f64]> = remaining.iter().map(|&i| population[i].as_ref()).collect();
        let front: Vec<usize> = pareto_front(&pts).into_iter().map(|k| remaining[k]).collect();
        if rng.random::<f64>() <= 1.0 - epsilon || front.len() == remaining.len() {
            return front[rng.random_range(0..front.len())];
        }
        remaining.retain(|i| !front.contains(i));
    }
}

struct Member<M> {
    id: usize,
    config: Configuration,
    model: M,
}

/// Three phases over the stop budget: random architectures, then children
/// enlarged by function-preserving morphisms, then children pruned and
/// distilled from their parents. Non-architectural hyperparameters always
/// come from expected improvement on a GP over the full encoding with the
/// architecture held fixed.
pub fn run_bulkcut<B: Morphable>(
    bench: &B,
    stop: Stop,
    workers: usize,
    params: &BulkCutParams,
    seed: u64,
) -> Result<RunHistory> {
    params.validate()?;
    let mut runner = Runner::new(bench, stop, workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = bench.space();
    let (_, b_max) = bench.budget_range();
    let mask = bench.architecture_mask();
    let expensive = bench
        .cheap_objectives(&space.sample_uniform(&mut rng))
        .and_then(|c| c.iter().position(Option::is_none))
        .unwrap_or(bench.n_objectives() - 1);
    let search = AcquisitionSearch {
        pool_size: params.pool_size,
        refine_steps: params.refine_steps,
        refine_batch: 20,
        sigma: 0.05,
    };
    let mut gp = GpSchedule::new(params.refit_every);
    let mut population: Vec<Member<B::Model>> = Vec::new();

    while !runner.done() && runner.progress() < params.t3 {
        let t = runner.progress();
        let phase: u8 = if t < params.t1 { 1 } else if t < params.t2 { 2 } else { 3 };
        let mut info = RecordInfo::phase(phase);
        let mut child: Option<(Configuration, Origin<B::Model>)> = None;
        if phase > 1 && !population.is_empty() {
            let objectives: Vec<&[f64]> =
                population.iter().map(|m| runner.history().records()[m.id].objectives.as_slice()).collect();
            for _ in 0..params.max_redraws {
                let p = &population[paretsilon_greedy(&objectives, params.epsilon, &mut rng)];
                let made = if phase == 2 {
                    bench.grow(&p.config, &p.model, &mut rng).map(|(c, m)| (c, Origin::Grown(m)))
                } else {
                    let kf = params.keep_fractions[rng.random_range(0..params.keep_fractions.len())];
                    bench
                        .shrink(&p.config, &p.model, kf, &mut rng)
                        .map(|(c, m)| (c, Origin::Shrunk { student: m, teacher: p.model.clone() }))
                };
                if let Some(made) = made {
                    info.parent = Some(p.id);
                    child = Some(made);
                    break;
                }
            }
            if child.is_none() {
                info.note = Some("no applicable morphism; random architecture".into());
            }
        }
        let (arch, origin) = child.unwrap_or_else(|| (space.sample_uniform(&mut rng), Origin::Fresh));

        let config = choose_hyperparameters(&runner, &mut gp, &search, &mask, expensive, &arch, &mut rng);
        let job = Job::new(config, b_max).with_info(info);
        let done = runner.evaluate_with(vec![job], |job| bench.realize(&job.config, origin.clone(), job.budget));
        let Some((id, model)) = done.into_iter().next() else { break };
        population.push(Member { id, config: runner.history().records()[id].config.clone(), model });
    }
    Ok(runner.finish())
}

/// Expected improvement on the expensive objective over the free slots,
/// with the architecture of `arch` frozen. Falls back to `arch` itself, then
/// to Gaussian moves of its free slots, to avoid repeating an evaluation.
fn choose_hyperparameters<R: Rng + ?Sized>(
    runner: &Runner<'_>,
    gp: &mut GpSchedule,
    search: &AcquisitionSearch,
    mask: &[bool],
    expensive: usize,
    arch: &Configuration,
    rng: &mut R,
) -> Configuration {
    let space = runner.bench().space();
    let with_arch = |c: &Configuration| {
        let mut out = c.clone();
        for (i, &frozen) in mask.iter().enumerate() {
            if frozen {
                out.set(i, arch.get(i).cloned());
            }
        }
        out
    };
    let mut proposal = None;
    if runner.evaluations() >= 2 {
        let rows: Vec<usize> = (0..runner.evaluations()).collect();
        let (inputs, objectives) = super::training_data(runner, &rows);
        let targets: Vec<f64> = objectives.iter().map(|y| y[expensive]).collect();
        if let Some(model) = gp.fit(&inputs, &targets) {
            let best = targets.iter().copied().fold(f64::INFINITY, f64::min);
            let fixed = FixedCoords { frozen: mask.to_vec(), values: space.encode(arch).into_inner() };
            let score = |_: &[Configuration], xs: &[Vec<f64>]| -> Vec<f64> {
                xs.iter()
                    .map(|x| {
                        let (m, s) = model.predict(x);
                        ei(m, s, best)
                    })
                    .collect()
            };
            proposal = search
                .maximize(space, Some(&fixed), |c| !runner.seen(&with_arch(c)), score, rng)
                .map(|p| with_arch(&p.config));
        }
    }
    let candidate = proposal.unwrap_or_else(|| arch.clone());
    if !runner.seen(&candidate) {
        return candidate;
    }
    for _ in 0..100 {
        let moved = with_arch(&space.gaussian_perturb_masked(&candidate, 0.1, Some(mask), rng));
        if !runner.seen(&moved) {
            return moved;
        }
    }
    candidate
}

fn set(config: &mut Configuration, space: &crate::space::SearchSpace, name: &str, value: Option<Value>) {
    config.set(space.index_of(name).expect("known slot"), value);
}

fn int(config: &Configuration, space: &crate::space::SearchSpace, name: &str) -> i64 {
    space.value(config, name).and_then(Value::as_i64).expect("active integer slot")
}

impl Morphable for Zdt1 {
    type Model = ();

    /// `x0` alone plays the architecture; it is also the first objective.
    fn architecture_mask(&self) -> Vec<bool> {
        (0..self.dim()).map(|i| i == 0).collect()
    }

    fn size(&self, config: &Configuration) -> f64 {
        config.get(0).and_then(Value::as_f64).unwrap_or(0.0)
    }

    fn grow<R: Rng + ?Sized>(&self, parent: &Configuration, _: &(), rng: &mut R) -> Option<(Configuration, ())> {
        let x = self.size(parent);
        let grown = canonical(x + (1.0 - x) * rng.random_range(0.05..=1.0));
        let mut child = parent.clone();
        child.set(0, Some(Value::Float(grown)));
        (grown > x && grown <= 1.0).then_some((child, ()))
    }

    fn shrink<R: Rng + ?Sized>(&self, parent: &Configuration, _: &(), kf: f64, _: &mut R) -> Option<(Configuration, ())> {
        let x = self.size(parent);
        let shrunk = canonical(x * kf);
        let mut child = parent.clone();
        child.set(0, Some(Value::Float(shrunk)));
        (shrunk < x).then_some((child, ()))
    }

    fn realize(&self, config: &Configuration, _: Origin<()>, budget: Budget) -> (Evaluation, ()) {
        (self.evaluate(config, budget), ())
    }
}

const CONV_MAX: usize = 3;
const FC_MAX: usize = 3;

/// Layer lists of a reference-space configuration.
struct Layers {
    filters: Vec<i64>,
    kernels: Vec<i64>,
    neurons: Vec<i64>,
}

impl Layers {
    fn read(space: &crate::space::SearchSpace, c: &Configuration) -> Self {
        let convs = int(c, space, "num_conv_layers") as usize;
        let fcs = int(c, space, "num_fc_layers") as usize;
        Self {
            filters: (1..=convs).map(|i| int(c, space, &format!("num_filters_{i}"))).collect(),
            kernels: (1..=convs).map(|i| int(c, space, &format!("kernel_size_{i}"))).collect(),
            neurons: (1..=fcs).map(|i| int(c, space, &format!("num_neurons_{i}"))).collect(),
        }
    }

    fn write(&self, space: &crate::space::SearchSpace, base: &Configuration) -> Configuration {
        let mut c = base.clone();
        set(&mut c, space, "num_conv_layers", Some(Value::Int(self.filters.len() as i64)));
        set(&mut c, space, "num_fc_layers", Some(Value::Int(self.neurons.len() as i64)));
        for i in 0..CONV_MAX {
            set(&mut c, space, &format!("num_filters_{}", i + 1), self.filters.get(i).map(|&v| Value::Int(v)));
            set(&mut c, space, &format!("kernel_size_{}", i + 1), self.kernels.get(i).map(|&v| Value::Int(v)));
        }
        for i in 0..FC_MAX {
            set(&mut c, space, &format!("num_neurons_{}", i + 1), self.neurons.get(i).map(|&v| Value::Int(v)));
        }
        c
    }
}

impl Morphable for NasHpoProxy {
    type Model = ();

    fn architecture_mask(&self) -> Vec<bool> {
        let space = self.space();
        (0..space.dim()).map(|i| !matches!(space.params()[i].name.as_str(), "learning_rate" | "batch_size")).collect()
    }

    fn size(&self, config: &Configuration) -> f64 {
        self.param_count(config).map_or(f64::INFINITY, |p| p as f64)
    }

    /// Inserts a conv or dense layer with sampled settings at a random
    /// position, keeping only strict size increases.
    fn grow<R: Rng + ?Sized>(&self, parent: &Configuration, _: &(), rng: &mut R) -> Option<(Configuration, ())> {
        let space = self.space();
        let before = self.size(parent);
        let sample = |name: &str, rng: &mut R| {
            let spec = &space.params()[space.index_of(name).expect("slot")];
            spec.sample(rng).as_i64().expect("integer parameter")
        };
        for _ in 0..10 {
            let mut layers = Layers::read(space, parent);
            let conv = rng.random_bool(0.5);
            if conv && layers.filters.len() < CONV_MAX {
                let at = rng.random_range(0..=layers.filters.len());
                layers.filters.insert(at, sample("num_filters_1", rng));
                layers.kernels.insert(at, sample("kernel_size_1", rng));
            } else if !conv && layers.neurons.len() < FC_MAX {
                let at = rng.random_range(0..=layers.neurons.len());
                layers.neurons.insert(at, sample("num_neurons_1", rng));
            } else {
                continue;
            }
            let child = layers.write(space, parent);
            if space.validate(&child).is_ok() && cnn_param_count(space, &child, Default::default()).is_ok() && self.size(&child) > before {
                return Some((child, ()));
            }
        }
        None
    }

    /// Prunes filters or neurons of one layer.
    fn shrink<R: Rng + ?Sized>(&self, parent: &Configuration, _: &(), kf: f64, rng: &mut R) -> Option<(Configuration, ())> {
        let space = self.space();
        let before = self.size(parent);
        let layers = Layers::read(space, parent);
        let mut slots: Vec<(bool, usize)> =
            (0..layers.filters.len()).map(|i| (true, i)).chain((0..layers.neurons.len()).map(|i| (false, i))).collect();
        while !slots.is_empty() {
            let (conv, i) = slots.swap_remove(rng.random_range(0..slots.len()));
            let mut next = Layers::read(space, parent);
            let (width, floor) = if conv { (&mut next.filters[i], 16) } else { (&mut next.neurons[i], 2) };
            let kept = (pruned_width(*width as usize, kf) as i64).max(floor);
            if kept >= *width {
                continue;
            }
            *width = kept;
            let child = next.write(space, parent);
            if space.validate(&child).is_ok() && self.size(&child) < before {
                return Some((child, ()));
            }
        }
        None
    }

    fn realize(&self, config: &Configuration, _: Origin<()>, budget: Budget) -> (Evaluation, ()) {
        (self.evaluate(config, budget), ())
    }
}

impl Morphable for TinyMlp {
    type Model = DenseNet<f32>;

    fn architecture_mask(&self) -> Vec<bool> {
        let space = self.space();
        (0..space.dim()).map(|i| space.params()[i].name.starts_with("num_")).collect()
    }

    fn size(&self, config: &Configuration) -> f64 {
        self.widths(config).map_or(f64::INFINITY, |w| crate::bench::mlp_param_count(&w) as f64)
    }

    /// Identity layer insertion after a random hidden layer.
    fn grow<R: Rng + ?Sized>(&self, parent: &Configuration, model: &DenseNet<f32>, rng: &mut R) -> Option<(Configuration, DenseNet<f32>)> {
        if model.hidden_widths().len() >= TinyMlp::MAX_LAYERS as usize {
            return None;
        }
        let positions = insert_positions(model);
        let at = *positions.get(rng.random_range(0..positions.len().max(1)))?;
        let child = insert_layer_identity(model, at).ok()?;
        let config = self.with_architecture(parent, &child.hidden_widths()).ok()?;
        Some((config, child))
    }

    /// Drops the weakest units of a random hidden layer that can lose some.
    fn shrink<R: Rng + ?Sized>(
        &self,
        parent: &Configuration,
        model: &DenseNet<f32>,
        kf: f64,
        rng: &mut R,
    ) -> Option<(Configuration, DenseNet<f32>)> {
        let widths = model.hidden_widths();
        let mut layers: Vec<usize> = (0..widths.len()).collect();
        while !layers.is_empty() {
            let layer = layers.swap_remove(rng.random_range(0..layers.len()));
            let w = widths[layer];
            let kept = pruned_width(w, kf).max(2);
            if kept >= w {
                continue;
            }
            let child = prune_units(model, layer, kept as f64 / w as f64).ok()?;
            let config = self.with_architecture(parent, &child.hidden_widths()).ok()?;
            return Some((config, child));
        }
        None
    }

    /// Fresh models train from scratch and grown ones are fine-tuned, both
    /// for `budget` epochs. Shrunk ones are distilled from their parent on
    /// the training inputs for `budget` epochs and scored without touching a
    /// label.
    fn realize(&self, config: &Configuration, origin: Origin<DenseNet<f32>>, budget: Budget) -> (Evaluation, DenseNet<f32>) {
        match origin {
            Origin::Fresh => {
                let mut net = self.fresh_model(config).expect("configurations from the space are complete");
                let eval = self.train_model(&mut net, config, budget);
                (eval, net)
            }
            Origin::Grown(mut net) => {
                let eval = self.train_model(&mut net, config, budget);
                (eval, net)
            }
            Origin::Shrunk { mut student, teacher } => {
                let note = self.distill_into(&mut student, &teacher, config, budget).err();
                let mut eval = self.train_model(&mut student, config, 0);
                eval.cost = self.cost(student.param_count() as u64, budget);
                if note.is_some() {
                    eval.objectives[1] = 1.0;
                    eval.note = note;
                }
                (eval, student)
            }
        }
    }
}

impl TinyMlp {
    /// Distills `teacher` into `student` on the training inputs only, with
    /// the learning rate and batch size of `config`.
    pub fn distill_into(
        &self,
        student: &mut DenseNet<f32>,
        teacher: &DenseNet<f32>,
        config: &Configuration,
        epochs: Budget,
    ) -> std::result::Result<f64, String> {
        let space = self.space();
        let lr = space.value(config, "learning_rate").and_then(Value::as_f64).ok_or("missing learning_rate")?;
        let batch = space.value(config, "batch_size").and_then(Value::as_i64).ok_or("missing batch_size")?;
        let seed = crate::bench::stable_hash(space.config_to_json(config).to_string().as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = TrainSpec::new(lr, batch as usize, epochs as usize);
        distill(student, teacher, &self.data().train_x, &spec, 1.0, &mut rng).map_err(|e| format!("distillation diverged: {e}"))
    }
}
