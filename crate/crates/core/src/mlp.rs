//! A small dense-network engine: batched forward/backward passes, Adam, and
//! the structural edits used by the grow-then-shrink search (identity layer
//! insertion, unit pruning, distillation).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("network needs at least one layer")]
    Empty,
    #[error("layer {index}: expects {expected} inputs, previous layer yields {got}")]
    Chain { index: usize, expected: usize, got: usize },
    #[error("layer {index}: weight buffer has {got} entries, expected {expected}")]
    Shape { index: usize, expected: usize, got: usize },
    #[error("input has {got} features, network expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("output dimension mismatch: {0} vs {1}")]
    OutputDim(usize, usize),
    #[error("{inputs} inputs but {targets} targets")]
    TargetCount { inputs: usize, targets: usize },
    #[error("invalid training spec: {0}")]
    Spec(String),
    #[error("loss became non-finite in epoch {epoch} (last finite loss {last})")]
    NonFinite { epoch: usize, last: f64 },
    #[error("cannot insert a layer at position {0}: it must follow a hidden ReLU layer")]
    InsertPosition(usize),
    #[error("layer {0} is not a hidden layer")]
    NotHidden(usize),
    #[error("keep fraction {0} outside (0, 1]")]
    KeepFraction(f64),
    #[error("pruning layer {layer} would leave no units")]
    PruneToZero { layer: usize },
    #[error("network document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, MlpError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    /// He-initialized layer.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let scale = (2.0 / inputs.max(1) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::of(z * scale)
            })
            .collect();
        Self { inputs, outputs, weights, bias: vec![T::zero(); outputs], activation }
    }

    pub fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    fn row(&self, o: usize) -> &[T] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// Feed-forward network; the last layer produces logits (or regression
/// outputs) and has identity activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct DenseNet<T> {
    layers: Vec<Layer<T>>,
}

/// Per-layer gradients, shaped like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(net: &DenseNet<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for g in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
    }
}

/// What the output layer is trained against.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a, T> {
    /// Class indices, softmax cross-entropy.
    Classes(&'a [usize]),
    /// Real targets, mean squared error.
    Values(&'a [Vec<T>]),
    /// Soft class distributions, KL divergence to the softmax of
    /// `logits / temperature`.
    Soft { probs: &'a [Vec<T>], temperature: f64 },
}

impl<T> Targets<'_, T> {
    fn len(&self) -> usize {
        match self {
            Targets::Classes(y) => y.len(),
            Targets::Values(y) => y.len(),
            Targets::Soft { probs, .. } => probs.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl TrainSpec {
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize) -> Self {
        Self { learning_rate, batch_size, epochs, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(MlpError::Spec(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(MlpError::Spec("batch size 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(MlpError::Spec("Adam constants".into()));
        }
        Ok(())
    }
}

/// Adam moment estimates for one network.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    m: Gradients<T>,
    v: Gradients<T>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &DenseNet<T>) -> Self {
        Self { m: Gradients::zeros_like(net), v: Gradients::zeros_like(net), step: 0 }
    }

    fn apply(&mut self, net: &mut DenseNet<T>, grads: &Gradients<T>, spec: &TrainSpec) {
        self.step += 1;
        let (b1, b2) = (T::of(spec.beta1), T::of(spec.beta2));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        let (lr, eps) = (T::of(spec.learning_rate), T::of(spec.epsilon));
        let update = |p: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        };
        for (l, layer) in net.layers.iter_mut().enumerate() {
            update(&mut layer.weights, &grads.weights[l], &mut self.m.weights[l], &mut self.v.weights[l]);
            update(&mut layer.bias, &grads.bias[l], &mut self.m.bias[l], &mut self.v.bias[l]);
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
fn axpy<T: Scalar>(y: &mut [T], alpha: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn softmax_in_place<T: Scalar>(z: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in z.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in z.iter_mut() {
        *x = *x / sum;
    }
}

/// Softmax of `logits / temperature`.
pub fn softmax<T: Scalar>(logits: &[T], temperature: f64) -> Vec<T> {
    let t = T::of(temperature);
    let mut z: Vec<T> = logits.iter().map(|&x| x / t).collect();
    softmax_in_place(&mut z);
    z
}

impl<T: Scalar> DenseNet<T> {
    /// Random network with `widths = [inputs, hidden.., outputs]`; hidden
    /// layers use ReLU.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        if widths.len() < 2 {
            return Err(MlpError::Empty);
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Identity } else { Activation::Relu };
                Layer::random(w[0], w[1], act, rng)
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(MlpError::Empty);
        }
        for (index, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs {
                return Err(MlpError::Shape { index, expected: l.inputs * l.outputs, got: l.weights.len() });
            }
            if l.bias.len() != l.outputs {
                return Err(MlpError::Shape { index, expected: l.outputs, got: l.bias.len() });
            }
            if index > 0 && layers[index - 1].outputs != l.inputs {
                return Err(MlpError::Chain { index, expected: l.inputs, got: layers[index - 1].outputs });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Widths of the hidden layers.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z: Vec<T> = (0..layer.outputs).map(|o| layer.bias[o] + dot(layer.row(o), &a)).collect();
            if layer.activation == Activation::Relu {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            a = z;
        }
        a
    }

    /// Runs a flat `batch x inputs` buffer through the net, keeping every
    /// layer's post-activation output in `acts` (`acts[0]` is the input).
    fn forward_batch(&self, input: Vec<T>, batch: usize, acts: &mut Vec<Vec<T>>) {
        acts.clear();
        acts.push(input);
        for layer in &self.layers {
            let prev = acts.last().expect("input present");
            let mut out = vec![T::zero(); batch * layer.outputs];
            for b in 0..batch {
                let x = &prev[b * layer.inputs..(b + 1) * layer.inputs];
                let y = &mut out[b * layer.outputs..(b + 1) * layer.outputs];
                for o in 0..layer.outputs {
                    let z = layer.bias[o] + dot(layer.row(o), x);
                    y[o] = if layer.activation == Activation::Relu { z.max(T::zero()) } else { z };
                }
            }
            acts.push(out);
        }
    }

    /// Loss and output-layer error signal for one batch.
    fn output_delta(&self, out: &[T], rows: &[usize], targets: &Targets<'_, T>) -> (f64, Vec<T>) {
        let k = self.output_dim();
        let batch = rows.len();
        let inv = T::of(1.0 / batch as f64);
        let mut delta = out.to_vec();
        let mut loss = 0.0;
        match targets {
            Targets::Classes(labels) => {
                for (b, &r) in rows.iter().enumerate() {
                    let d = &mut delta[b * k..(b + 1) * k];
                    softmax_in_place(d);
                    let y = labels[r];
                    loss -= d[y].to_f64_lossy().max(1e-300).ln();
                    d[y] -= T::one();
                    d.iter_mut().for_each(|v| *v = *v * inv);
                }
            }
            Targets::Values(values) => {
                let scale = T::of(2.0 / (batch * k) as f64);
                for (b, &r) in rows.iter().enumerate() {
                    for j in 0..k {
                        let e = out[b * k + j] - values[r][j];
                        loss += (e * e).to_f64_lossy() / k as f64;
                        delta[b * k + j] = e * scale;
                    }
                }
            }
            Targets::Soft { probs, temperature } => {
                let t = T::of(*temperature);
                let scale = inv / t;
                for (b, &r) in rows.iter().enumerate() {
                    let d = &mut delta[b * k..(b + 1) * k];
                    d.iter_mut().for_each(|v| *v = *v / t);
                    softmax_in_place(d);
                    for j in 0..k {
                        let q = probs[r][j];
                        if q > T::zero() {
                            loss += (q * (q.ln() - d[j].max(T::min_positive_value()).ln())).to_f64_lossy();
                        }
                        d[j] = (d[j] - q) * scale;
                    }
                }
            }
        }
        (loss / batch as f64, delta)
    }

    fn backward(&self, acts: &[Vec<T>], batch: usize, mut delta: Vec<T>, grads: &mut Gradients<T>) {
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let (n_in, n_out) = (layer.inputs, layer.outputs);
            let a_prev = &acts[l];
            for b in 0..batch {
                let x = &a_prev[b * n_in..(b + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[b * n_out + o];
                    if d == T::zero() {
                        continue;
                    }
                    grads.bias[l][o] += d;
                    axpy(&mut grads.weights[l][o * n_in..(o + 1) * n_in], d, x);
                }
            }
            if l == 0 {
                break;
            }
            let mut next = vec![T::zero(); batch * n_in];
            for b in 0..batch {
                let dst = &mut next[b * n_in..(b + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[b * n_out + o];
                    if d != T::zero() {
                        axpy(dst, d, layer.row(o));
                    }
                }
                if self.layers[l - 1].activation == Activation::Relu {
                    for (g, &a) in dst.iter_mut().zip(&a_prev[b * n_in..(b + 1) * n_in]) {
                        if a <= T::zero() {
                            *g = T::zero();
                        }
                    }
                }
            }
            delta = next;
        }
    }

    fn gather(&self, inputs: &[Vec<T>], rows: &[usize]) -> Vec<T> {
        let d = self.input_dim();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            flat.extend_from_slice(&inputs[r]);
        }
        flat
    }

    fn check_data(&self, inputs: &[Vec<T>], targets: &Targets<'_, T>) -> Result<()> {
        if inputs.len() != targets.len() {
            return Err(MlpError::TargetCount { inputs: inputs.len(), targets: targets.len() });
        }
        if let Some(x) = inputs.iter().find(|x| x.len() != self.input_dim()) {
            return Err(MlpError::InputDim { expected: self.input_dim(), got: x.len() });
        }
        let k = self.output_dim();
        let bad = match targets {
            Targets::Classes(y) => y.iter().any(|&c| c >= k),
            Targets::Values(v) => v.iter().any(|t| t.len() != k),
            Targets::Soft { probs, temperature } => *temperature <= 0.0 || probs.iter().any(|p| p.len() != k),
        };
        if bad {
            return Err(MlpError::OutputDim(k, k));
        }
        Ok(())
    }

    /// Mean loss and its gradient over the whole data set.
    pub fn loss_and_gradient(&self, inputs: &[Vec<T>], targets: Targets<'_, T>) -> Result<(f64, Gradients<T>)> {
        self.check_data(inputs, &targets)?;
        let rows: Vec<usize> = (0..inputs.len()).collect();
        let mut acts = Vec::new();
        self.forward_batch(self.gather(inputs, &rows), rows.len(), &mut acts);
        let (loss, delta) = self.output_delta(acts.last().expect("output"), &rows, &targets);
        let mut grads = Gradients::zeros_like(self);
        self.backward(&acts, rows.len(), delta, &mut grads);
        Ok((loss, grads))
    }

    /// Mean loss over the whole data set.
    pub fn loss(&self, inputs: &[Vec<T>], targets: Targets<'_, T>) -> Result<f64> {
        self.check_data(inputs, &targets)?;
        let rows: Vec<usize> = (0..inputs.len()).collect();
        let mut acts = Vec::new();
        self.forward_batch(self.gather(inputs, &rows), rows.len(), &mut acts);
        Ok(self.output_delta(acts.last().expect("output"), &rows, &targets).0)
    }

    /// Minibatch Adam. Returns the mean loss of the final epoch (NaN when
    /// `epochs == 0`).
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        inputs: &[Vec<T>],
        targets: Targets<'_, T>,
        spec: &TrainSpec,
        rng: &mut R,
    ) -> Result<f64> {
        spec.validate()?;
        self.check_data(inputs, &targets)?;
        let mut adam = Adam::new(self);
        let mut grads = Gradients::zeros_like(self);
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut acts = Vec::new();
        let mut last = f64::NAN;
        for epoch in 0..spec.epochs {
            order.shuffle(rng);
            let mut total = 0.0;
            for rows in order.chunks(spec.batch_size) {
                self.forward_batch(self.gather(inputs, rows), rows.len(), &mut acts);
                let (loss, delta) = self.output_delta(acts.last().expect("output"), rows, &targets);
                if !loss.is_finite() {
                    return Err(MlpError::NonFinite { epoch, last });
                }
                total += loss * rows.len() as f64;
                grads.clear();
                self.backward(&acts, rows.len(), delta, &mut grads);
                adam.apply(self, &grads, spec);
            }
            last = total / inputs.len().max(1) as f64;
            if self.layers.iter().any(|l| l.weights.iter().chain(&l.bias).any(|w| !w.is_finite())) {
                return Err(MlpError::NonFinite { epoch, last });
            }
        }
        Ok(last)
    }

    /// Fraction of misclassified points.
    pub fn error_rate(&self, inputs: &[Vec<T>], labels: &[usize]) -> f64 {
        if inputs.is_empty() {
            return 0.0;
        }
        let wrong = inputs
            .iter()
            .zip(labels)
            .filter(|(x, &y)| {
                let out = self.forward(x);
                let mut best = 0;
                for (j, v) in out.iter().enumerate() {
                    if *v > out[best] {
                        best = j;
                    }
                }
                best != y
            })
            .count();
        wrong as f64 / inputs.len() as f64
    }

    /// Mean KL divergence from `teacher`'s softmax to this net's softmax.
    pub fn mean_kl_from(&self, teacher: &DenseNet<T>, inputs: &[Vec<T>], temperature: f64) -> f64 {
        let total: f64 = inputs
            .iter()
            .map(|x| {
                let q = softmax(&teacher.forward(x), temperature);
                let p = softmax(&self.forward(x), temperature);
                q.iter()
                    .zip(&p)
                    .filter(|(q, _)| **q > T::zero())
                    .map(|(q, p)| (*q * (q.ln() - p.max(T::min_positive_value()).ln())).to_f64_lossy())
                    .sum::<f64>()
            })
            .sum();
        total / inputs.len().max(1) as f64
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: DeserializeOwned,
    {
        let net: Self = serde_json::from_str(text).map_err(|e| MlpError::Document(e.to_string()))?;
        Self::from_layers(net.layers)
    }
}

/// Inserts an identity-initialized `w x w` ReLU layer so that it becomes
/// layer `position`. The previous layer must be a hidden ReLU layer, whose
/// non-negative outputs pass through unchanged, so the network computes
/// exactly the same function.
pub fn insert_layer_identity<T: Scalar>(net: &DenseNet<T>, position: usize) -> Result<DenseNet<T>> {
    if position == 0 || position >= net.layers.len() || net.layers[position - 1].activation != Activation::Relu {
        return Err(MlpError::InsertPosition(position));
    }
    let w = net.layers[position - 1].outputs;
    let mut weights = vec![T::zero(); w * w];
    for i in 0..w {
        weights[i * w + i] = T::one();
    }
    let layer = Layer { inputs: w, outputs: w, weights, bias: vec![T::zero(); w], activation: Activation::Relu };
    let mut layers = net.layers.clone();
    layers.insert(position, layer);
    Ok(DenseNet { layers })
}

/// Positions accepted by [`insert_layer_identity`].
pub fn insert_positions<T: Scalar>(net: &DenseNet<T>) -> Vec<usize> {
    (1..net.layers.len()).filter(|&p| net.layers[p - 1].activation == Activation::Relu).collect()
}

/// Identity insertion at a uniformly chosen valid position.
pub fn insert_layer_random<T: Scalar, R: Rng + ?Sized>(net: &DenseNet<T>, rng: &mut R) -> Result<DenseNet<T>> {
    let positions = insert_positions(net);
    if positions.is_empty() {
        return Err(MlpError::InsertPosition(0));
    }
    insert_layer_identity(net, positions[rng.random_range(0..positions.len())])
}

/// Number of units kept out of `width` for a keep fraction below one.
pub fn pruned_width(width: usize, keep_fraction: f64) -> usize {
    if keep_fraction >= 1.0 {
        return width;
    }
    ((keep_fraction * width as f64).round() as usize).min(width.saturating_sub(1))
}

/// Removes the units of hidden layer `layer` with the smallest summed
/// absolute outgoing weight, keeping `round(keep_fraction * width)` of them
/// (at most `width - 1` when `keep_fraction < 1`). Ties keep the lower index.
pub fn prune_units<T: Scalar>(net: &DenseNet<T>, layer: usize, keep_fraction: f64) -> Result<DenseNet<T>> {
    if layer + 1 >= net.layers.len() {
        return Err(MlpError::NotHidden(layer));
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(MlpError::KeepFraction(keep_fraction));
    }
    let width = net.layers[layer].outputs;
    let keep = pruned_width(width, keep_fraction);
    if keep == width {
        return Ok(net.clone());
    }
    if keep == 0 {
        return Err(MlpError::PruneToZero { layer });
    }
    let next = &net.layers[layer + 1];
    let score: Vec<T> =
        (0..width).map(|u| (0..next.outputs).map(|o| next.weights[o * next.inputs + u].abs()).sum()).collect();
    let mut ranked: Vec<usize> = (0..width).collect();
    ranked.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut kept = ranked[..keep].to_vec();
    kept.sort_unstable();

    let mut layers = net.layers.clone();
    let cur = &net.layers[layer];
    layers[layer] = Layer {
        inputs: cur.inputs,
        outputs: keep,
        weights: kept.iter().flat_map(|&u| cur.row(u).iter().copied()).collect(),
        bias: kept.iter().map(|&u| cur.bias[u]).collect(),
        activation: cur.activation,
    };
    layers[layer + 1] = Layer {
        inputs: keep,
        outputs: next.outputs,
        weights: (0..next.outputs).flat_map(|o| kept.iter().map(move |&u| next.weights[o * next.inputs + u])).collect(),
        bias: next.bias.clone(),
        activation: next.activation,
    };
    Ok(DenseNet { layers })
}

/// Trains `student` to match `teacher`'s output distribution on `inputs`.
/// No labels are involved. Returns the final epoch's mean KL.
pub fn distill<T: Scalar, R: Rng + ?Sized>(
    student: &mut DenseNet<T>,
    teacher: &DenseNet<T>,
    inputs: &[Vec<T>],
    spec: &TrainSpec,
    temperature: f64,
    rng: &mut R,
) -> Result<f64> {
    if student.input_dim() != teacher.input_dim() {
        return Err(MlpError::InputDim { expected: teacher.input_dim(), got: student.input_dim() });
    }
    if student.output_dim() != teacher.output_dim() {
        return Err(MlpError::OutputDim(student.output_dim(), teacher.output_dim()));
    }
    let probs: Vec<Vec<T>> = inputs.iter().map(|x| softmax(&teacher.forward(x), temperature)).collect();
    student.train(inputs, Targets::Soft { probs: &probs, temperature }, spec, rng)
}
