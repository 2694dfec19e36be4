use std::f64::consts::FRAC_PI_2;

use super::{pilot_reference, Benchmark, Evaluation};
use crate::fidelity::Budget;
use crate::space::{unit_box_space, Configuration, SearchSpace};

fn coords(config: &Configuration) -> Vec<f64> {
    config.slots().iter().map(|v| v.as_ref().and_then(|v| v.as_f64()).unwrap_or(0.0)).collect()
}

/// ZDT1 on `[0, 1]^d`. The first objective is `x0`, which is known without
/// evaluation. Below the full budget the second objective is inflated by
/// `fidelity_bias * (1 - b / b_max)`.
#[derive(Clone, Debug)]
pub struct Zdt1 {
    space: SearchSpace,
    b_max: Budget,
    fidelity_bias: f64,
    reference: Vec<f64>,
}

impl Zdt1 {
    pub fn new(dim: usize, b_max: Budget, fidelity_bias: f64) -> Self {
        assert!(dim >= 2, "ZDT1 needs at least two variables");
        let mut bench = Self { space: unit_box_space(dim), b_max, fidelity_bias, reference: Vec::new() };
        bench.reference = pilot_reference(&bench, 256, 0);
        bench
    }

    pub fn objectives_at(x: &[f64]) -> [f64; 2] {
        let f1 = x[0];
        let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
        [f1, g * (1.0 - (f1 / g).sqrt())]
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl Default for Zdt1 {
    fn default() -> Self {
        Self::new(6, 25, 0.1)
    }
}

impl Benchmark for Zdt1 {
    fn name(&self) -> &str {
        "zdt1"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn objective_names(&self) -> Vec<String> {
        vec!["f1".into(), "f2".into()]
    }

    fn budget_range(&self) -> (Budget, Budget) {
        (1, self.b_max)
    }

    fn evaluate(&self, config: &Configuration, budget: Budget) -> Evaluation {
        let [f1, f2] = Self::objectives_at(&coords(config));
        let lag = 1.0 - f64::from(budget.min(self.b_max)) / f64::from(self.b_max);
        Evaluation {
            objectives: vec![f1, f2 + self.fidelity_bias * lag],
            cost: f64::from(budget) / f64::from(self.b_max),
            note: None,
        }
    }

    fn cheap_objectives(&self, config: &Configuration) -> Option<Vec<Option<f64>>> {
        Some(vec![Some(coords(config)[0]), None])
    }

    fn reference_point(&self) -> Vec<f64> {
        self.reference.clone()
    }
}

/// DTLZ2 with `m` objectives on `[0, 1]^d`; full fidelity only.
#[derive(Clone, Debug)]
pub struct Dtlz2 {
    space: SearchSpace,
    m: usize,
}

impl Dtlz2 {
    pub fn new(m: usize, dim: usize) -> Self {
        assert!(m >= 2 && dim >= m, "DTLZ2 needs m >= 2 and d >= m");
        Self { space: unit_box_space(dim), m }
    }

    pub fn objectives_at(x: &[f64], m: usize) -> Vec<f64> {
        let g: f64 = x[m - 1..].iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
        (0..m)
            .map(|i| {
                let mut f = 1.0 + g;
                for xj in &x[..m - 1 - i] {
                    f *= (xj * FRAC_PI_2).cos();
                }
                if i > 0 {
                    f *= (x[m - 1 - i] * FRAC_PI_2).sin();
                }
                f
            })
            .collect()
    }
}

impl Benchmark for Dtlz2 {
    fn name(&self) -> &str {
        "dtlz2"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn objective_names(&self) -> Vec<String> {
        (0..self.m).map(|i| format!("f{}", i + 1)).collect()
    }

    fn budget_range(&self) -> (Budget, Budget) {
        (1, 1)
    }

    fn evaluate(&self, config: &Configuration, _budget: Budget) -> Evaluation {
        Evaluation { objectives: Self::objectives_at(&coords(config), self.m), cost: 1.0, note: None }
    }

    fn reference_point(&self) -> Vec<f64> {
        // Objectives never exceed 1 + g <= 1 + (d - m + 1) / 4.
        let g_max = (self.space.dim() - self.m + 1) as f64 * 0.25;
        vec![1.1 * (1.0 + g_max); self.m]
    }
}
