//! Brute-force reference implementations used by the test suites.
//!
//! Nothing here calls into [`novak`](crate::novak), [`baselines`](crate::baselines)
//! or [`lookahead`](crate::lookahead): every formula is written out again,
//! as plainly as possible, so agreement between the two is evidence rather
//! than tautology.

/// Parameters after every step of a replayed run, with the gradient fed
/// at each step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceOracle {
    /// `snapshots[i]` is θ after step `i + 1`.
    pub snapshots: Vec<Vec<f64>>,
    /// `inputs[i]` is the gradient used at step `i + 1`.
    pub inputs: Vec<Vec<f64>>,
}

impl TraceOracle {
    pub fn steps(&self) -> usize {
        self.snapshots.len()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.snapshots.last().map(Vec::as_slice)
    }
}

/// Textbook Adam hyperparameters for the reference trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceAdam {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for ReferenceAdam {
    fn default() -> Self {
        Self { alpha: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Slow-weight update computed the long way: keep every fast iterate,
/// then `θ₀ + α·(1/k)·Σ(θᵢ − θ₀)`.
pub fn storing_lookahead_oracle(theta0: &[f64], fast_iterates: &[Vec<f64>], alpha_la: f64) -> Vec<f64> {
    assert!(!fast_iterates.is_empty(), "need at least one fast iterate");
    let k = fast_iterates.len() as f64;
    let mut out = theta0.to_vec();
    for (j, x0) in theta0.iter().enumerate() {
        let mut total = 0.0;
        for it in fast_iterates {
            total += it[j] - x0;
        }
        out[j] = x0 + alpha_la * (total / k);
    }
    out
}

/// `(1 − αλ)ᵗ θ₀`.
pub fn closed_form_decay(theta0: &[f64], alpha: f64, lam: f64, t: u32) -> Vec<f64> {
    let f = (1.0 - alpha * lam).powi(t as i32);
    theta0.iter().map(|x| f * x).collect()
}

/// Plain gradient descent on `½ Σ λᵢ xᵢ²`: `xᵢ(t) = (1 − αλᵢ)ᵗ xᵢ(0)`.
pub fn closed_form_quadratic_descent(eigenvalues: &[f64], theta0: &[f64], alpha: f64, t: u32) -> Vec<f64> {
    eigenvalues.iter().zip(theta0).map(|(l, x)| (1.0 - alpha * l).powi(t as i32) * x).collect()
}

/// Adam with ε inside the square root, fixed betas, no decay.
pub fn reference_adam_trajectory(
    mut grad: impl FnMut(&[f64]) -> Vec<f64>,
    theta0: &[f64],
    steps: usize,
    cfg: ReferenceAdam,
) -> TraceOracle {
    run_reference(&mut grad, theta0, steps, cfg, false)
}

/// RAdam with ε inside the square root. Below the variance-tractability
/// threshold it takes the uncorrected adaptive step (no rectification
/// factor), which is the convention the optimizer under test follows.
pub fn reference_radam_trajectory(
    mut grad: impl FnMut(&[f64]) -> Vec<f64>,
    theta0: &[f64],
    steps: usize,
    cfg: ReferenceAdam,
) -> TraceOracle {
    run_reference(&mut grad, theta0, steps, cfg, true)
}

fn run_reference(
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    theta0: &[f64],
    steps: usize,
    cfg: ReferenceAdam,
    rectify: bool,
) -> TraceOracle {
    let n = theta0.len();
    let mut theta = theta0.to_vec();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut trace = TraceOracle::default();
    let rho_inf = 2.0 / (1.0 - cfg.beta2) - 1.0;
    for step in 1..=steps {
        let g = grad(&theta);
        assert_eq!(g.len(), n);
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        }
        let b1t = cfg.beta1.powf(step as f64);
        let b2t = cfg.beta2.powf(step as f64);
        let mut factor = 1.0;
        if rectify {
            let t = step as f64;
            let rho = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
            if rho >= 5.0 {
                let num = (rho - 4.0) * (rho - 2.0) * rho_inf;
                let den = (rho_inf - 4.0) * (rho_inf - 2.0) * rho;
                factor = (num / den).sqrt().min(1.0);
            }
        }
        for i in 0..n {
            let m_hat = m[i] / (1.0 - b1t);
            let v_hat = v[i] / (1.0 - b2t);
            theta[i] -= cfg.alpha * factor * m_hat / (v_hat + cfg.epsilon).sqrt();
        }
        trace.snapshots.push(theta.clone());
        trace.inputs.push(g);
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookahead_oracle_examples() {
        let out = storing_lookahead_oracle(&[1.0, 2.0], &[vec![3.0, 0.0]], 0.5);
        assert_eq!(out, vec![2.0, 1.0]);
        let still = storing_lookahead_oracle(&[1.0, 2.0], &vec![vec![1.0, 2.0]; 4], 0.5);
        assert_eq!(still, vec![1.0, 2.0]);
    }

    #[test]
    fn decay_examples() {
        assert_eq!(closed_form_decay(&[1.5, -2.0], 0.1, 0.01, 0), vec![1.5, -2.0]);
        assert_eq!(closed_form_decay(&[1.5], 0.1, 0.0, 50), vec![1.5]);
        let out = closed_form_decay(&[1.0], 0.1, 0.01, 2);
        assert!((out[0] - 0.998001).abs() < 1e-15);
    }

    #[test]
    fn quadratic_descent_matches_iteration() {
        let eig = [1.0, 4.0];
        let mut x = vec![1.0, 1.0];
        for _ in 0..10 {
            x = x.iter().zip(&eig).map(|(xi, l)| xi - 0.1 * l * xi).collect();
        }
        let closed = closed_form_quadratic_descent(&eig, &[1.0, 1.0], 0.1, 10);
        for (a, b) in x.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_gradients_give_a_constant_trace() {
        let trace = reference_adam_trajectory(|t| vec![0.0; t.len()], &[0.5, -1.0], 20, ReferenceAdam::default());
        assert_eq!(trace.steps(), 20);
        assert!(trace.snapshots.iter().all(|s| s == &vec![0.5, -1.0]));
    }

    #[test]
    fn first_adam_step_has_size_alpha() {
        let trace = reference_adam_trajectory(|_| vec![3.0], &[0.0], 1, ReferenceAdam::default());
        assert!((trace.last().unwrap()[0] + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn radam_is_adam_while_unrectified() {
        let grad = |t: &[f64]| t.iter().map(|x| 2.0 * x + 0.1).collect::<Vec<_>>();
        let a = reference_adam_trajectory(grad, &[1.0, -1.0], 5, ReferenceAdam::default());
        let r = reference_radam_trajectory(grad, &[1.0, -1.0], 5, ReferenceAdam::default());
        assert_eq!(a, r);
        let a = reference_adam_trajectory(grad, &[1.0, -1.0], 6, ReferenceAdam::default());
        let r = reference_radam_trajectory(grad, &[1.0, -1.0], 6, ReferenceAdam::default());
        assert_ne!(a.last(), r.last());
    }
}
