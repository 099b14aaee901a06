use rand::Rng;

use super::{rng, Problem};
use crate::error::{NovakError, Result};

/// Chained Rosenbrock, `Σᵢ (1 − xᵢ)² + 100 (xᵢ₊₁ − xᵢ²)²`, minimum 0 at
/// all-ones.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    name: String,
    n: usize,
}

impl Rosenbrock {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(NovakError::config(format!("rosenbrock needs an even dimension >= 2, got {n}")));
        }
        Ok(Self { name: format!("rosenbrock_n{n}"), n })
    }
}

impl Problem for Rosenbrock {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn loss(&self, x: &[f64]) -> f64 {
        x.windows(2).map(|w| (1.0 - w[0]).powi(2) + 100.0 * (w[1] - w[0] * w[0]).powi(2)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let r = x[i + 1] - x[i] * x[i];
            g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * r;
            g[i + 1] += 200.0 * r;
        }
        g
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(0.0)
    }

    /// The classic start `(−1.2, 1, −1.2, 1, …)` for seed 0; other seeds
    /// jitter it by up to ±0.1 per component.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let base = (0..self.n).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 });
        if seed == 0 {
            return base.collect();
        }
        let mut r = rng(seed, 0);
        base.map(|x| x + r.random_range(-0.1..0.1)).collect()
    }
}
