pub mod scalar;
pub mod space;
pub mod pareto;
pub mod fidelity;
pub mod mlp;
pub mod stats;
pub mod surrogate;
pub mod acquisition;
pub mod bench;
pub mod optimizers;

/// Double-precision network, the default for morphism and gradient work.
pub type Net = mlp::DenseNet<f64>;
/// Single-precision network used by the training benchmarks and ensemble.
pub type Net32 = mlp::DenseNet<f32>;
