//! Differentiable test objectives with analytic gradients.

mod data;
mod logistic;
pub(crate) mod mlp;
mod quadratic;
mod rosenbrock;

pub use data::LabeledData;
pub use logistic::LogisticRegression;
pub use mlp::DeepPlainMlp;
pub use quadratic::Quadratic;
pub use rosenbrock::Rosenbrock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::param::{Model, ParameterGroup, RoleTag};

/// Name, shape and role of one parameter group in a problem's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLayout {
    pub name: String,
    pub shape: Vec<usize>,
    pub role: RoleTag,
}

impl GroupLayout {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An objective `L(θ)` over a flat parameter vector.
///
/// Implementations are immutable after construction; evaluation is
/// reentrant.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dimension(&self) -> usize;

    fn loss(&self, theta: &[f64]) -> f64;

    fn gradient(&self, theta: &[f64]) -> Vec<f64>;

    /// Mini-batch gradient for stochastic problems. The same `seed`
    /// always draws the same batch.
    fn stochastic_gradient(&self, _theta: &[f64], _seed: u64, _batch: usize) -> Option<Vec<f64>> {
        None
    }

    /// Rejects batch sizes the problem cannot sample.
    fn check_batch(&self, _batch: usize) -> Result<()> {
        Ok(())
    }

    fn optimum_value(&self) -> Option<f64> {
        None
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Held-out accuracy for classification problems.
    fn accuracy(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Starting point for a run with the given seed.
    fn initial_point(&self, seed: u64) -> Vec<f64>;

    /// Group structure of θ. Defaults to a single flat group.
    fn layout(&self) -> Vec<GroupLayout> {
        vec![GroupLayout { name: "theta".into(), shape: vec![self.dimension()], role: RoleTag::Other }]
    }

    /// Wraps a flat vector into a [`Model`] following [`layout`](Problem::layout).
    fn model(&self, theta: &[f64]) -> Model {
        assert_eq!(theta.len(), self.dimension(), "theta has the wrong length");
        let mut offset = 0;
        let groups = self
            .layout()
            .into_iter()
            .map(|l| {
                let n = l.len();
                let values = theta[offset..offset + n].to_vec();
                offset += n;
                ParameterGroup::new(l.name, values, l.shape, l.role).expect("layout matches dimension")
            })
            .collect();
        Model::new(groups)
    }
}

/// Central differences: `(L(θ+h·eᵢ) − L(θ−h·eᵢ)) / 2h` for every component.
pub fn finite_difference_gradient(problem: &dyn Problem, theta: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = problem.loss(&x);
            x[i] = orig - h;
            let down = problem.loss(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise relative error between two gradients, skipping
/// components where both magnitudes are below `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .filter(|(a, n)| a.abs() >= floor || n.abs() >= floor)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()))
        .fold(0.0, f64::max)
}

/// Runs the central-difference check at `theta` and returns the worst
/// relative error (components below 1e-10 on both sides are skipped).
pub fn gradient_check(problem: &dyn Problem, theta: &[f64], h: f64) -> f64 {
    let analytic = problem.gradient(theta);
    let numeric = finite_difference_gradient(problem, theta, h);
    max_relative_error(&analytic, &numeric, 1e-10)
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
