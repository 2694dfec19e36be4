//! Mixed integer / categorical / continuous search spaces with single-parent
//! conditions, their unit-cube encoding, and the variation operators used by
//! the evolutionary and mutation-based optimizers.
//!
//! A [`Configuration`] is index-aligned with its [`SearchSpace`]: slot `i`
//! holds a value exactly when parameter `i` is active. Activity is resolved
//! top-down, so a parameter is active when it has no condition, or its parent
//! is active and the parent's value satisfies the predicate.

use std::fmt;
use std::hash::{Hash, Hasher};

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("parameter `{0}`: empty or inverted range")]
    BadRange(String),
    #[error("parameter `{0}`: log scale requires a positive lower bound")]
    BadLogRange(String),
    #[error("parameter `{0}`: categorical parameter without values")]
    NoValues(String),
    #[error("parameter `{name}`: condition parent `{parent}` is not declared earlier")]
    UnknownParent { name: String, parent: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("configuration has {got} slots, space has {expected}")]
    Arity { expected: usize, got: usize },
    #[error("parameter `{0}` is active but has no value")]
    MissingValue(String),
    #[error("parameter `{0}` is inactive but has a value")]
    InactiveValue(String),
    #[error("parameter `{name}`: value {value} outside its domain")]
    OutOfDomain { name: String, value: String },
    #[error("unit coordinate {index} = {value} outside [0, 1]")]
    CoordOutOfRange { index: usize, value: f64 },
    #[error("invalid space document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, SpaceError>;

/// A parameter value.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    /// Numeric view; booleans map to 0/1, strings have none.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Bool(b) => Some(if b { 1.0 } else { 0.0 }),
            Value::Int(i) => Some(i as f64),
            Value::Float(f) => Some(f),
            Value::Str(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Int(i) => Some(i),
            Value::Bool(b) => Some(b as i64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Str(a), Value::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Integer { lo: i64, hi: i64 },
    Continuous { lo: f64, hi: f64 },
    Categorical { values: Vec<Value> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    Equals(Value),
    AtLeast(f64),
}

impl Predicate {
    fn holds(&self, value: &Value) -> bool {
        match self {
            Predicate::Equals(v) => match (v.as_f64(), value.as_f64()) {
                (Some(a), Some(b)) if !matches!(v, Value::Bool(_)) => a == b,
                _ => v == value,
            },
            Predicate::AtLeast(t) => value.as_f64().is_some_and(|x| x >= *t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub parent: String,
    pub predicate: Predicate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub domain: Domain,
    pub log_scale: bool,
    pub condition: Option<Condition>,
}

impl ParamSpec {
    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        Self { name: name.into(), domain: Domain::Integer { lo, hi }, log_scale: false, condition: None }
    }

    pub fn continuous(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), domain: Domain::Continuous { lo, hi }, log_scale: false, condition: None }
    }

    pub fn categorical(name: &str, values: Vec<Value>) -> Self {
        Self { name: name.into(), domain: Domain::Categorical { values }, log_scale: false, condition: None }
    }

    pub fn log(mut self) -> Self {
        self.log_scale = true;
        self
    }

    pub fn when(mut self, parent: &str, predicate: Predicate) -> Self {
        self.condition = Some(Condition { parent: parent.into(), predicate });
        self
    }

    fn validate(&self) -> Result<()> {
        match &self.domain {
            Domain::Integer { lo, hi } => {
                if lo >= hi {
                    return Err(SpaceError::BadRange(self.name.clone()));
                }
                if self.log_scale && *lo <= 0 {
                    return Err(SpaceError::BadLogRange(self.name.clone()));
                }
            }
            Domain::Continuous { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(SpaceError::BadRange(self.name.clone()));
                }
                if self.log_scale && *lo <= 0.0 {
                    return Err(SpaceError::BadLogRange(self.name.clone()));
                }
            }
            Domain::Categorical { values } => {
                if values.is_empty() {
                    return Err(SpaceError::NoValues(self.name.clone()));
                }
            }
        }
        Ok(())
    }

    fn contains(&self, value: &Value) -> bool {
        match (&self.domain, value) {
            (Domain::Integer { lo, hi }, Value::Int(v)) => lo <= v && v <= hi,
            (Domain::Continuous { lo, hi }, Value::Float(v)) => lo <= v && v <= hi,
            (Domain::Categorical { values }, v) => values.contains(v),
            _ => false,
        }
    }

    fn warp(&self, x: f64) -> f64 {
        if self.log_scale {
            x.ln()
        } else {
            x
        }
    }

    fn unwarp(&self, x: f64) -> f64 {
        if self.log_scale {
            x.exp()
        } else {
            x
        }
    }

    fn encode(&self, value: &Value) -> f64 {
        let u = match &self.domain {
            Domain::Integer { lo, hi } => {
                let (lo, hi) = (self.warp(*lo as f64), self.warp(*hi as f64));
                (self.warp(value.as_f64().unwrap_or(0.0)) - lo) / (hi - lo)
            }
            Domain::Continuous { lo, hi } => {
                let (lo, hi) = (self.warp(*lo), self.warp(*hi));
                (self.warp(value.as_f64().unwrap_or(0.0)) - lo) / (hi - lo)
            }
            Domain::Categorical { values } => {
                if values.len() == 1 {
                    0.0
                } else {
                    let idx = values.iter().position(|v| v == value).unwrap_or(0);
                    idx as f64 / (values.len() - 1) as f64
                }
            }
        };
        u.clamp(0.0, 1.0)
    }

    fn decode(&self, u: f64) -> Value {
        match &self.domain {
            Domain::Integer { lo, hi } => {
                let (wlo, whi) = (self.warp(*lo as f64), self.warp(*hi as f64));
                let x = self.unwarp(wlo + u * (whi - wlo));
                Value::Int((round_half_down(x) as i64).clamp(*lo, *hi))
            }
            Domain::Continuous { lo, hi } => {
                let (wlo, whi) = (self.warp(*lo), self.warp(*hi));
                let x = self.unwarp(wlo + u * (whi - wlo));
                Value::Float(canonical(x).clamp(*lo, *hi))
            }
            Domain::Categorical { values } => {
                let idx = round_half_down(u * (values.len() - 1) as f64) as usize;
                values[idx.min(values.len() - 1)].clone()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match &self.domain {
            Domain::Integer { lo, hi } => {
                if self.log_scale {
                    let (wlo, whi) = (self.warp(*lo as f64), self.warp(*hi as f64));
                    let x = self.unwarp(rng.random_range(wlo..=whi));
                    Value::Int((round_half_down(x) as i64).clamp(*lo, *hi))
                } else {
                    Value::Int(rng.random_range(*lo..=*hi))
                }
            }
            Domain::Continuous { lo, hi } => {
                let (wlo, whi) = (self.warp(*lo), self.warp(*hi));
                let x = self.unwarp(rng.random_range(wlo..=whi));
                Value::Float(canonical(x).clamp(*lo, *hi))
            }
            Domain::Categorical { values } => values[rng.random_range(0..values.len())].clone(),
        }
    }
}

/// Rounds to the nearest integer, breaking ties toward the lower value.
pub fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

/// Snaps a continuous value to 12 significant decimal digits.
///
/// Continuous parameters live on this grid so that decoding an encoded value
/// reproduces it bit-for-bit, even through the `ln`/`exp` of log-scale
/// parameters.
pub fn canonical(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x + 0.0;
    }
    let exponent = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - exponent);
    (x * scale).round() / scale + 0.0
}

/// Point of the unit hypercube `[0, 1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        for (index, &value) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpaceError::CoordOutOfRange { index, value });
            }
        }
        Ok(Self(coords))
    }

    /// Clamps every coordinate into `[0, 1]`; NaN maps to 0.
    pub fn clamped(mut coords: Vec<f64>) -> Self {
        for c in &mut coords {
            *c = if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) };
        }
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// An assignment of values to the active parameters of a space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    values: Vec<Option<Value>>,
}

impl Configuration {
    pub fn from_slots(values: Vec<Option<Value>>) -> Self {
        Self { values }
    }

    pub fn slots(&self) -> &[Option<Value>] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<&Value> {
        self.values.get(index).and_then(Option::as_ref)
    }

    pub fn set(&mut self, index: usize, value: Option<Value>) {
        self.values[index] = value;
    }

    pub fn active_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
    parents: Vec<Option<usize>>,
    structural: Vec<bool>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        let mut parents = Vec::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            p.validate()?;
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
            let parent = match &p.condition {
                None => None,
                Some(c) => Some(params[..i].iter().position(|q| q.name == c.parent).ok_or_else(|| {
                    SpaceError::UnknownParent { name: p.name.clone(), parent: c.parent.clone() }
                })?),
            };
            parents.push(parent);
        }
        let mut structural = vec![false; params.len()];
        for parent in parents.iter().flatten() {
            structural[*parent] = true;
        }
        Ok(Self { params, parents, structural })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// True when some other parameter's activity depends on parameter `index`.
    pub fn is_structural(&self, index: usize) -> bool {
        self.structural[index]
    }

    pub fn value<'a>(&self, config: &'a Configuration, name: &str) -> Option<&'a Value> {
        self.index_of(name).and_then(|i| config.get(i))
    }

    fn is_active(&self, index: usize, slots: &[Option<Value>]) -> bool {
        match (self.parents[index], &self.params[index].condition) {
            (Some(parent), Some(cond)) => slots[parent].as_ref().is_some_and(|v| cond.predicate.holds(v)),
            _ => true,
        }
    }

    /// Mask of parameters active under `config`'s structural values.
    pub fn active_mask(&self, config: &Configuration) -> Vec<bool> {
        (0..self.dim()).map(|i| self.is_active(i, &config.values)).collect()
    }

    pub fn validate(&self, config: &Configuration) -> Result<()> {
        if config.values.len() != self.dim() {
            return Err(SpaceError::Arity { expected: self.dim(), got: config.values.len() });
        }
        for (i, p) in self.params.iter().enumerate() {
            match (self.is_active(i, &config.values), &config.values[i]) {
                (true, None) => return Err(SpaceError::MissingValue(p.name.clone())),
                (false, Some(_)) => return Err(SpaceError::InactiveValue(p.name.clone())),
                (true, Some(v)) if !p.contains(v) => {
                    return Err(SpaceError::OutOfDomain { name: p.name.clone(), value: v.to_string() })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Draws every active parameter uniformly (log-uniformly on log scales).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let mut slots: Vec<Option<Value>> = vec![None; self.dim()];
        for i in 0..self.dim() {
            if self.is_active(i, &slots) {
                slots[i] = Some(self.params[i].sample(rng));
            }
        }
        Configuration { values: slots }
    }

    pub fn encode(&self, config: &Configuration) -> UnitVector {
        UnitVector(
            self.params
                .iter()
                .zip(&config.values)
                .map(|(p, v)| v.as_ref().map_or(0.0, |v| p.encode(v)))
                .collect(),
        )
    }

    pub fn decode(&self, unit: &UnitVector) -> Result<Configuration> {
        self.decode_coords(unit.coords())
    }

    /// Decodes raw coordinates, rejecting any outside `[0, 1]`.
    pub fn decode_coords(&self, coords: &[f64]) -> Result<Configuration> {
        if coords.len() != self.dim() {
            return Err(SpaceError::Arity { expected: self.dim(), got: coords.len() });
        }
        let mut slots: Vec<Option<Value>> = vec![None; self.dim()];
        for (i, &u) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&u) {
                return Err(SpaceError::CoordOutOfRange { index: i, value: u });
            }
            if self.is_active(i, &slots) {
                slots[i] = Some(self.params[i].decode(u));
            }
        }
        Ok(Configuration { values: slots })
    }

    /// Re-establishes conditional consistency: newly active parameters are
    /// sampled, deactivated ones dropped.
    fn repair<R: Rng + ?Sized>(&self, mut slots: Vec<Option<Value>>, rng: &mut R) -> Configuration {
        for i in 0..self.dim() {
            if self.is_active(i, &slots) {
                if slots[i].is_none() {
                    slots[i] = Some(self.params[i].sample(rng));
                }
            } else {
                slots[i] = None;
            }
        }
        Configuration { values: slots }
    }

    /// Re-samples `k` distinct active parameters of `parent`.
    pub fn mutate_k<R: Rng + ?Sized>(&self, parent: &Configuration, k: usize, rng: &mut R) -> Configuration {
        if k == 0 {
            return parent.clone();
        }
        let active: Vec<usize> = (0..self.dim()).filter(|&i| parent.values[i].is_some()).collect();
        let k = k.min(active.len());
        let mut slots = parent.values.clone();
        for pick in index::sample(rng, active.len(), k).into_iter() {
            let i = active[pick];
            slots[i] = Some(self.params[i].sample(rng));
        }
        self.repair(slots, rng)
    }

    /// Uniform crossover. A slot the chosen parent lacks but the child needs is
    /// sampled fresh.
    pub fn recombine<R: Rng + ?Sized>(&self, a: &Configuration, b: &Configuration, rng: &mut R) -> Configuration {
        let slots = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(va, vb)| if rng.random_bool(0.5) { va.clone() } else { vb.clone() })
            .collect();
        self.repair(slots, rng)
    }

    /// Adds i.i.d. `N(0, sigma^2)` noise to the encoding, clamps and decodes.
    pub fn gaussian_perturb<R: Rng + ?Sized>(&self, parent: &Configuration, sigma: f64, rng: &mut R) -> Configuration {
        self.gaussian_perturb_masked(parent, sigma, None, rng)
    }

    /// Like [`gaussian_perturb`](Self::gaussian_perturb) but coordinates with
    /// `frozen[i] == true` keep their encoded value.
    pub fn gaussian_perturb_masked<R: Rng + ?Sized>(
        &self,
        parent: &Configuration,
        sigma: f64,
        frozen: Option<&[bool]>,
        rng: &mut R,
    ) -> Configuration {
        let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
        let mut coords = self.encode(parent).into_inner();
        for (i, c) in coords.iter_mut().enumerate() {
            let eta = noise.sample(rng);
            if frozen.is_some_and(|f| f[i]) {
                continue;
            }
            *c = (*c + eta).clamp(0.0, 1.0);
        }
        self.decode_coords(&coords).expect("clamped coordinates decode")
    }

    /// Serializes to the JSON parameter document.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.params.iter().map(ParamDoc::from).collect::<Vec<_>>()).expect("space serializes")
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        let docs: Vec<ParamDoc> =
            serde_json::from_value(doc.clone()).map_err(|e| SpaceError::Document(e.to_string()))?;
        Self::new(docs.into_iter().map(ParamSpec::try_from).collect::<Result<Vec<_>>>()?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| SpaceError::Document(e.to_string()))?;
        Self::from_json(&doc)
    }

    /// Name-to-value object of the active parameters.
    pub fn config_to_json(&self, config: &Configuration) -> serde_json::Value {
        let map = self
            .params
            .iter()
            .zip(&config.values)
            .filter_map(|(p, v)| v.as_ref().map(|v| (p.name.clone(), serde_json::to_value(v).expect("value"))))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }

    pub fn config_from_json(&self, doc: &serde_json::Value) -> Result<Configuration> {
        let map = doc.as_object().ok_or_else(|| SpaceError::Document("configuration must be an object".into()))?;
        for key in map.keys() {
            if self.index_of(key).is_none() {
                return Err(SpaceError::UnknownParam(key.clone()));
            }
        }
        let values = self
            .params
            .iter()
            .map(|p| {
                map.get(&p.name)
                    .map(|v| {
                        let value: Value =
                            serde_json::from_value(v.clone()).map_err(|e| SpaceError::Document(e.to_string()))?;
                        Ok(match (&p.domain, value) {
                            (Domain::Continuous { .. }, Value::Int(i)) => Value::Float(i as f64),
                            (_, v) => v,
                        })
                    })
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        let config = Configuration { values };
        self.validate(&config)?;
        Ok(config)
    }
}

#[derive(Serialize, Deserialize)]
struct ConditionDoc {
    parent: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    equals: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    geq: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamDoc {
    name: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    range: Option<[serde_json::Number; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    values: Option<Vec<Value>>,
    #[serde(default)]
    log: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    condition: Option<ConditionDoc>,
}

impl From<&ParamSpec> for ParamDoc {
    fn from(p: &ParamSpec) -> Self {
        let (kind, range, values) = match &p.domain {
            Domain::Integer { lo, hi } => ("integer", Some([(*lo).into(), (*hi).into()]), None),
            Domain::Continuous { lo, hi } => (
                "continuous",
                Some([
                    serde_json::Number::from_f64(*lo).expect("finite"),
                    serde_json::Number::from_f64(*hi).expect("finite"),
                ]),
                None,
            ),
            Domain::Categorical { values } => ("categorical", None, Some(values.clone())),
        };
        let condition = p.condition.as_ref().map(|c| match &c.predicate {
            Predicate::Equals(v) => ConditionDoc { parent: c.parent.clone(), equals: Some(v.clone()), geq: None },
            Predicate::AtLeast(t) => ConditionDoc { parent: c.parent.clone(), equals: None, geq: Some(*t) },
        });
        ParamDoc { name: p.name.clone(), kind: kind.into(), range, values, log: p.log_scale, condition }
    }
}

impl TryFrom<ParamDoc> for ParamSpec {
    type Error = SpaceError;

    fn try_from(doc: ParamDoc) -> Result<Self> {
        let bad = |msg: &str| SpaceError::Document(format!("parameter `{}`: {msg}", doc.name));
        let domain = match doc.kind.as_str() {
            "integer" => {
                let [lo, hi] = doc.range.as_ref().ok_or_else(|| bad("missing range"))?;
                let lo = lo.as_i64().ok_or_else(|| bad("integer range expected"))?;
                let hi = hi.as_i64().ok_or_else(|| bad("integer range expected"))?;
                Domain::Integer { lo, hi }
            }
            "continuous" => {
                let [lo, hi] = doc.range.as_ref().ok_or_else(|| bad("missing range"))?;
                let lo = lo.as_f64().ok_or_else(|| bad("numeric range expected"))?;
                let hi = hi.as_f64().ok_or_else(|| bad("numeric range expected"))?;
                Domain::Continuous { lo, hi }
            }
            "categorical" => Domain::Categorical { values: doc.values.clone().ok_or_else(|| bad("missing values"))? },
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        let condition = match doc.condition {
            None => None,
            Some(c) => {
                let predicate = match (c.equals, c.geq) {
                    (Some(v), None) => Predicate::Equals(v),
                    (None, Some(t)) => Predicate::AtLeast(t),
                    _ => return Err(bad("condition needs exactly one of `equals` / `geq`")),
                };
                Some(Condition { parent: c.parent, predicate })
            }
        };
        let spec = ParamSpec { name: doc.name, domain, log_scale: doc.log, condition };
        spec.validate()?;
        Ok(spec)
    }
}

/// Maximum number of convolutional / fully connected layers in the reference
/// architecture space.
pub const MAX_CONV_LAYERS: usize = 3;
pub const MAX_FC_LAYERS: usize = 3;

/// The joint architecture + hyperparameter space of the reference CNN family:
/// 15 slots (per-layer filter counts and kernel sizes, per-layer FC widths,
/// and the shared scalars).
pub fn reference_space() -> SearchSpace {
    let mut params = vec![ParamSpec::integer("num_conv_layers", 1, MAX_CONV_LAYERS as i64)];
    for i in 1..=MAX_CONV_LAYERS {
        params.push(
            ParamSpec::integer(&format!("num_filters_{i}"), 16, 1024)
                .log()
                .when("num_conv_layers", Predicate::AtLeast(i as f64)),
        );
    }
    for i in 1..=MAX_CONV_LAYERS {
        params.push(
            ParamSpec::categorical(&format!("kernel_size_{i}"), vec![Value::Int(3), Value::Int(5), Value::Int(7)])
                .when("num_conv_layers", Predicate::AtLeast(i as f64)),
        );
    }
    params.push(ParamSpec::categorical("batch_norm", vec![Value::Bool(false), Value::Bool(true)]));
    params.push(ParamSpec::categorical("global_avg_pool", vec![Value::Bool(false), Value::Bool(true)]));
    params.push(ParamSpec::integer("num_fc_layers", 1, MAX_FC_LAYERS as i64));
    for i in 1..=MAX_FC_LAYERS {
        params.push(
            ParamSpec::integer(&format!("num_neurons_{i}"), 2, 512)
                .log()
                .when("num_fc_layers", Predicate::AtLeast(i as f64)),
        );
    }
    params.push(ParamSpec::continuous("learning_rate", 1e-5, 1.0).log());
    params.push(ParamSpec::integer("batch_size", 1, 512).log());
    SearchSpace::new(params).expect("reference space is valid")
}

/// The bundled JSON document of [`reference_space`].
pub const REFERENCE_SPACE_JSON: &str = include_str!("../fixtures/reference_space.json");

/// `d` unconditional continuous parameters `x0..x{d-1}` on `[0, 1]`.
pub fn unit_box_space(d: usize) -> SearchSpace {
    SearchSpace::new((0..d).map(|i| ParamSpec::continuous(&format!("x{i}"), 0.0, 1.0)).collect())
        .expect("unit box is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn reference_space_has_fifteen_slots() {
        let space = reference_space();
        assert_eq!(space.dim(), 15);
        assert!(space.is_structural(space.index_of("num_conv_layers").unwrap()));
        assert!(space.is_structural(space.index_of("num_fc_layers").unwrap()));
        assert!(!space.is_structural(space.index_of("learning_rate").unwrap()));
    }

    #[test]
    fn bundled_document_matches_builder() {
        let bundled = SearchSpace::from_json_str(REFERENCE_SPACE_JSON).unwrap();
        assert_eq!(bundled, reference_space());
        let again = SearchSpace::from_json(&reference_space().to_json()).unwrap();
        assert_eq!(again, reference_space());
    }

    #[test]
    fn single_conv_layer_has_one_filter_slot() {
        let space = reference_space();
        let mut rng = rng();
        let mut seen = 0;
        for _ in 0..500 {
            let c = space.sample_uniform(&mut rng);
            if space.value(&c, "num_conv_layers") == Some(&Value::Int(1)) {
                seen += 1;
                let filters = (1..=3).filter(|i| space.value(&c, &format!("num_filters_{i}")).is_some()).count();
                assert_eq!(filters, 1);
            }
            space.validate(&c).unwrap();
        }
        assert!(seen > 100);
    }

    #[test]
    fn kernel_size_is_uniform() {
        let space = reference_space();
        let idx = space.index_of("kernel_size_1").unwrap();
        let mut rng = rng();
        let mut counts = [0usize; 3];
        let n = 10_000;
        for _ in 0..n {
            let c = space.sample_uniform(&mut rng);
            let k = c.get(idx).unwrap().as_i64().unwrap();
            counts[((k - 3) / 2) as usize] += 1;
        }
        for count in counts {
            assert!((count as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn log_uniform_filter_median() {
        // Log-uniform on [2^4, 2^10] has median 2^7.
        let space = reference_space();
        let idx = space.index_of("num_filters_1").unwrap();
        let mut rng = rng();
        let mut values: Vec<f64> =
            (0..10_000).map(|_| space.sample_uniform(&mut rng).get(idx).unwrap().as_f64().unwrap()).collect();
        values.sort_by(f64::total_cmp);
        let median = values[values.len() / 2];
        assert!(median >= 2f64.powf(6.6) && median <= 2f64.powf(7.4), "median {median}");
    }

    #[test]
    fn singleton_space_always_same() {
        let space = SearchSpace::new(vec![ParamSpec::categorical("a", vec![Value::Int(5)])]).unwrap();
        let mut rng = rng();
        for _ in 0..20 {
            let c = space.sample_uniform(&mut rng);
            assert_eq!(c.get(0), Some(&Value::Int(5)));
            assert_eq!(space.encode(&c).coords(), &[0.0]);
        }
    }

    #[test]
    fn encode_endpoints_and_nearest_category() {
        let space = reference_space();
        let lr = space.index_of("learning_rate").unwrap();
        let mut c = space.sample_uniform(&mut rng());
        c.set(lr, Some(Value::Float(1e-5)));
        assert_eq!(space.encode(&c).coords()[lr], 0.0);
        c.set(lr, Some(Value::Float(1.0)));
        assert_eq!(space.encode(&c).coords()[lr], 1.0);

        let k = space.index_of("kernel_size_1").unwrap();
        let mut coords = space.encode(&c).into_inner();
        coords[k] = 0.49;
        assert_eq!(space.decode_coords(&coords).unwrap().get(k), Some(&Value::Int(5)));
        coords[k] = 0.25;
        assert_eq!(space.decode_coords(&coords).unwrap().get(k), Some(&Value::Int(3)), "ties go low");
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let space = reference_space();
        let mut coords = vec![0.5; 15];
        coords[3] = 1.5;
        assert!(matches!(space.decode_coords(&coords), Err(SpaceError::CoordOutOfRange { index: 3, .. })));
        assert!(UnitVector::new(vec![-0.1]).is_err());
    }

    #[test]
    fn inactive_slots_encode_to_zero() {
        let space = reference_space();
        let mut rng = rng();
        for _ in 0..200 {
            let c = space.sample_uniform(&mut rng);
            let u = space.encode(&c);
            for (i, slot) in c.slots().iter().enumerate() {
                if slot.is_none() {
                    assert_eq!(u.coords()[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn round_trip_random_configurations() {
        let space = reference_space();
        let mut rng = rng();
        for _ in 0..1000 {
            let c = space.sample_uniform(&mut rng);
            assert_eq!(space.decode(&space.encode(&c)).unwrap(), c);
        }
    }

    #[test]
    fn mutate_zero_is_identity() {
        let space = reference_space();
        let mut rng = rng();
        let c = space.sample_uniform(&mut rng);
        assert_eq!(space.mutate_k(&c, 0, &mut rng), c);
    }

    #[test]
    fn mutate_five_changes_at_most_five_shared_values() {
        let space = reference_space();
        let mut rng = rng();
        for _ in 0..500 {
            let parent = space.sample_uniform(&mut rng);
            let child = space.mutate_k(&parent, 5, &mut rng);
            space.validate(&child).unwrap();
            let changed = (0..space.dim())
                .filter(|&i| !space.is_structural(i))
                .filter(|&i| matches!((parent.get(i), child.get(i)), (Some(a), Some(b)) if a != b))
                .count();
            assert!(changed <= 5);
        }
    }

    #[test]
    fn growing_conv_stack_fills_new_slots() {
        let space = reference_space();
        let layers = space.index_of("num_conv_layers").unwrap();
        let mut rng = rng();
        let mut parent = space.sample_uniform(&mut rng);
        while parent.get(layers) != Some(&Value::Int(1)) {
            parent = space.sample_uniform(&mut rng);
        }
        let mut grown = 0;
        for _ in 0..2000 {
            let child = space.mutate_k(&parent, 1, &mut rng);
            if child.get(layers) == Some(&Value::Int(3)) {
                grown += 1;
                space.validate(&child).unwrap();
                for i in 1..=3 {
                    assert!(space.value(&child, &format!("num_filters_{i}")).is_some());
                    assert!(space.value(&child, &format!("kernel_size_{i}")).is_some());
                }
            }
        }
        assert!(grown > 0);
    }

    #[test]
    fn recombine_identical_parents() {
        let space = reference_space();
        let mut rng = rng();
        let a = space.sample_uniform(&mut rng);
        assert_eq!(space.recombine(&a, &a, &mut rng), a);
    }

    #[test]
    fn recombine_is_fair() {
        let space = reference_space();
        let mut rng = rng();
        let lr = space.index_of("learning_rate").unwrap();
        let bs = space.index_of("batch_size").unwrap();
        let a = space.sample_uniform(&mut rng);
        let mut b = space.sample_uniform(&mut rng);
        while b.get(lr) == a.get(lr) || b.get(bs) == a.get(bs) {
            b = space.sample_uniform(&mut rng);
        }
        let n = 10_000;
        let (mut from_a_lr, mut from_a_bs) = (0, 0);
        for _ in 0..n {
            let child = space.recombine(&a, &b, &mut rng);
            from_a_lr += (child.get(lr) == a.get(lr)) as usize;
            from_a_bs += (child.get(bs) == a.get(bs)) as usize;
        }
        assert!((from_a_lr as f64 / n as f64 - 0.5).abs() < 0.02);
        assert!((from_a_bs as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn recombine_populates_deeper_fc_stack() {
        let space = reference_space();
        let fc = space.index_of("num_fc_layers").unwrap();
        let mut rng = rng();
        let sample_with = |layers: i64, rng: &mut ChaCha8Rng| loop {
            let c = space.sample_uniform(rng);
            if c.get(fc) == Some(&Value::Int(layers)) {
                return c;
            }
        };
        let a = sample_with(1, &mut rng);
        let b = sample_with(3, &mut rng);
        let mut checked = 0;
        for _ in 0..200 {
            let child = space.recombine(&a, &b, &mut rng);
            space.validate(&child).unwrap();
            if child.get(fc) == Some(&Value::Int(3)) {
                checked += 1;
                for i in 1..=3 {
                    assert!(space.value(&child, &format!("num_neurons_{i}")).is_some());
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn tiny_sigma_perturbation_is_identity() {
        let space = reference_space();
        let mut rng = rng();
        for _ in 0..100 {
            let c = space.sample_uniform(&mut rng);
            assert_eq!(space.gaussian_perturb(&c, 1e-15, &mut rng), c);
        }
    }

    #[test]
    fn perturbation_clamps_at_upper_bound() {
        let space = unit_box_space(1);
        let c = Configuration::from_slots(vec![Some(Value::Float(1.0))]);
        let mut rng = rng();
        let mut stayed = 0;
        for _ in 0..200 {
            let child = space.gaussian_perturb(&c, 0.1, &mut rng);
            let x = child.get(0).unwrap().as_f64().unwrap();
            assert!(x <= 1.0);
            stayed += (x == 1.0) as usize;
        }
        // Roughly half the draws push past the bound and clamp back to it.
        assert!(stayed > 70 && stayed < 130);
    }

    #[test]
    fn kernel_change_rate_matches_rounding_rule() {
        // Kernel coordinates sit at 0, 0.5, 1. Leaving the nearest-category
        // cell needs noise beyond 0.25 toward an interior neighbour: one tail
        // at the ends, both tails in the middle.
        let tail = 0.5 * libm::erfc(0.25 / 0.1 / std::f64::consts::SQRT_2);
        let expected = (tail + 2.0 * tail + tail) / 3.0;
        let space = reference_space();
        let k = space.index_of("kernel_size_1").unwrap();
        let mut rng = rng();
        let trials = 1000;
        let mut changed = 0;
        for _ in 0..trials {
            let parent = space.sample_uniform(&mut rng);
            let child = space.gaussian_perturb(&parent, 0.1, &mut rng);
            changed += (child.get(k) != parent.get(k)) as usize;
        }
        assert!((changed as f64 / trials as f64 - expected).abs() < 0.05);
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(matches!(
            SearchSpace::new(vec![ParamSpec::integer("a", 3, 3)]),
            Err(SpaceError::BadRange(_))
        ));
        assert!(matches!(
            SearchSpace::new(vec![ParamSpec::continuous("a", 0.0, 1.0).log()]),
            Err(SpaceError::BadLogRange(_))
        ));
        assert!(matches!(
            SearchSpace::new(vec![ParamSpec::integer("a", 0, 3).when("b", Predicate::AtLeast(1.0))]),
            Err(SpaceError::UnknownParent { .. })
        ));
        assert!(matches!(
            SearchSpace::new(vec![ParamSpec::integer("a", 0, 3), ParamSpec::integer("a", 0, 2)]),
            Err(SpaceError::DuplicateName(_))
        ));
    }

    #[test]
    fn config_json_round_trip() {
        let space = reference_space();
        let mut rng = rng();
        for _ in 0..100 {
            let c = space.sample_uniform(&mut rng);
            let doc = space.config_to_json(&c);
            let text = serde_json::to_string(&doc).unwrap();
            let back = space.config_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn canonical_is_idempotent() {
        for x in [1e-5, 0.123456789012345, 0.99999999999951, 3.0e-3, 1.0] {
            let c = canonical(x);
            assert_eq!(canonical(c), c);
        }
    }
}
