use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{rng, Problem};
use crate::error::{NovakError, Result};

/// `L(θ) = ½ θᵀAθ` with diagonal `A` whose eigenvalues are log-spaced in
/// `[1, condition_number]` and shuffled by the seed.
///
/// With `noise > 0` the stochastic gradient is `Aθ + σ/√batch · ξ`,
/// `ξ ~ N(0, I)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    name: String,
    eigenvalues: Vec<f64>,
    noise: f64,
    seed: u64,
}

impl Quadratic {
    pub fn new(dimension: usize, condition_number: f64, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(NovakError::config("quadratic dimension must be positive"));
        }
        if !(condition_number >= 1.0 && condition_number.is_finite()) {
            return Err(NovakError::config(format!("condition number must be >= 1, got {condition_number}")));
        }
        let mut eigenvalues: Vec<f64> = (0..dimension)
            .map(|i| if dimension == 1 { 1.0 } else { condition_number.powf(i as f64 / (dimension - 1) as f64) })
            .collect();
        eigenvalues.shuffle(&mut rng(seed, 0));
        Ok(Self { name: format!("quadratic_d{dimension}_c{condition_number}"), eigenvalues, noise: 0.0, seed })
    }

    /// Adds Gaussian gradient noise of standard deviation `sigma` per
    /// component (for a batch of one).
    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(NovakError::config(format!("noise must be non-negative, got {sigma}")));
        }
        self.noise = sigma;
        Ok(self)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        0.5 * theta.iter().zip(&self.eigenvalues).map(|(x, l)| l * x * x).sum::<f64>()
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.eigenvalues).map(|(x, l)| l * x).collect()
    }

    fn stochastic_gradient(&self, theta: &[f64], seed: u64, batch: usize) -> Option<Vec<f64>> {
        if self.noise == 0.0 {
            return None;
        }
        let mut r = rng(seed, 1);
        let s = self.noise / (batch.max(1) as f64).sqrt();
        Some(self.gradient(theta).into_iter().map(|g| g + s * r.sample::<f64, _>(StandardNormal)).collect())
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().reduce(f64::max)
    }

    /// Gaussian start with variance `1/d` per coordinate (unit norm in
    /// expectation), independent of the eigenvalue shuffle.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(self.seed ^ seed, 2);
        let scale = (self.dimension() as f64).sqrt().recip();
        (0..self.dimension()).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gradient_check;

    #[test]
    fn unit_quadratic() {
        let q = Quadratic::new(1, 1.0, 0).unwrap();
        assert_eq!(q.loss(&[3.0]), 4.5);
        assert_eq!(q.gradient(&[3.0]), vec![3.0]);
        assert_eq!(q.gradient(&[0.0]), vec![0.0]);
    }

    #[test]
    fn spectrum_spans_the_condition_number() {
        let q = Quadratic::new(50, 100.0, 7).unwrap();
        let mut e = q.eigenvalues().to_vec();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[49] - 100.0).abs() < 1e-12);
        assert_eq!(q.lipschitz_hint(), Some(e[49]));
        assert_ne!(q.eigenvalues(), Quadratic::new(50, 100.0, 8).unwrap().eigenvalues());
    }

    #[test]
    fn fd_check_at_random_points() {
        let q = Quadratic::new(20, 100.0, 3).unwrap();
        for s in 0..100 {
            let theta = q.initial_point(s);
            assert!(gradient_check(&q, &theta, 1e-5) < 1e-6);
        }
    }

    #[test]
    fn noisy_gradient_is_unbiased_and_reproducible() {
        let q = Quadratic::new(4, 10.0, 1).unwrap().with_noise(0.5).unwrap();
        let theta = q.initial_point(0);
        assert_eq!(q.stochastic_gradient(&theta, 9, 1), q.stochastic_gradient(&theta, 9, 1));
        let n = 20_000;
        let mut mean = [0.0; 4];
        for s in 0..n {
            for (m, g) in mean.iter_mut().zip(q.stochastic_gradient(&theta, s, 1).unwrap()) {
                *m += g / n as f64;
            }
        }
        for (m, g) in mean.iter().zip(q.gradient(&theta)) {
            assert!((m - g).abs() < 0.02, "{m} vs {g}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Quadratic::new(3, 0.5, 0).is_err());
        assert!(Quadratic::new(0, 2.0, 0).is_err());
        assert!(Quadratic::new(3, 2.0, 0).unwrap().with_noise(-1.0).is_err());
    }
}
