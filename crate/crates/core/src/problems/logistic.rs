use rand::Rng;
use rand_distr::StandardNormal;

use super::{rng, LabeledData, Problem};
use crate::error::{NovakError, Result};

/// Features closer than this to the separating hyperplane are redrawn.
const MARGIN: f64 = 0.1;

/// Binary logistic regression without intercept on synthetic data that is
/// linearly separable with a margin. The loss is the mean logistic loss on
/// the training split; accuracy is measured on the held-out split.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    name: String,
    data: LabeledData,
    direction: Vec<f64>,
    seed: u64,
}

impl LogisticRegression {
    pub fn new(n_features: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if n_features == 0 || n_samples < 10 {
            return Err(NovakError::config(format!(
                "logistic regression needs at least 1 feature and 10 samples, got {n_features} and {n_samples}"
            )));
        }
        let mut r = rng(seed, 0);
        let mut direction: Vec<f64> = (0..n_features).map(|_| r.sample(StandardNormal)).collect();
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        direction.iter_mut().for_each(|x| *x /= norm);

        let mut rows = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        while rows.len() < n_samples {
            let x: Vec<f64> = (0..n_features).map(|_| r.sample(StandardNormal)).collect();
            let s: f64 = x.iter().zip(&direction).map(|(a, b)| a * b).sum();
            if s.abs() < MARGIN {
                continue;
            }
            labels.push(u8::from(s > 0.0));
            rows.push(x);
        }
        Ok(Self {
            name: format!("logistic_f{n_features}_n{n_samples}"),
            data: LabeledData::split(n_features, rows, labels, seed),
            direction,
            seed,
        })
    }

    /// Unit normal of the hyperplane that generated the labels.
    pub fn separating_direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn data(&self) -> &LabeledData {
        &self.data
    }

    fn accumulate(&self, theta: &[f64], i: usize, weight: f64, grad: &mut [f64]) {
        let (x, y) = self.data.train(i);
        let y = if y == 1 { 1.0 } else { -1.0 };
        let z = y * dot(theta, x);
        // d/dz softplus(−z) = −σ(−z)
        let coef = -y * sigmoid(-z) * weight;
        grad.iter_mut().zip(x).for_each(|(g, xi)| *g += coef * xi);
    }
}

impl Problem for LogisticRegression {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.data.dim()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        let n = self.data.train_len();
        (0..n)
            .map(|i| {
                let (x, y) = self.data.train(i);
                let y = if y == 1 { 1.0 } else { -1.0 };
                softplus(-y * dot(theta, x))
            })
            .sum::<f64>()
            / n as f64
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.data.train_len();
        let mut g = vec![0.0; theta.len()];
        for i in 0..n {
            self.accumulate(theta, i, 1.0 / n as f64, &mut g);
        }
        g
    }

    /// Mean gradient over `batch` training samples drawn uniformly with
    /// replacement.
    fn stochastic_gradient(&self, theta: &[f64], seed: u64, batch: usize) -> Option<Vec<f64>> {
        let mut r = rng(seed, 1);
        let n = self.data.train_len();
        let mut g = vec![0.0; theta.len()];
        for _ in 0..batch {
            self.accumulate(theta, r.random_range(0..n), 1.0 / batch as f64, &mut g);
        }
        Some(g)
    }

    fn check_batch(&self, batch: usize) -> Result<()> {
        if batch == 0 || 2 * batch > self.data.train_len() + self.data.test_len() {
            return Err(NovakError::config(format!("batch size {batch} needs at least twice as many samples")));
        }
        Ok(())
    }

    fn optimum_value(&self) -> Option<f64> {
        // separable data: the infimum is approached but never attained
        Some(0.0)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // ¼ · max ‖x‖² bounds the Hessian's largest eigenvalue
        let n = self.data.train_len();
        (0..n).map(|i| 0.25 * dot(self.data.train(i).0, self.data.train(i).0)).reduce(f64::max)
    }

    fn accuracy(&self, theta: &[f64]) -> Option<f64> {
        let n = self.data.test_len();
        let correct = (0..n)
            .filter(|&i| {
                let (x, y) = self.data.test(i);
                u8::from(dot(theta, x) > 0.0) == y
            })
            .count();
        Some(correct as f64 / n as f64)
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(self.seed ^ seed, 2);
        (0..self.dimension()).map(|_| 0.01 * r.sample::<f64, _>(StandardNormal)).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
