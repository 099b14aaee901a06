//! The individual phases of an optimizer step as pure functions.
//!
//! [`Novak::step`](super::Novak::step) composes these; they are public so that
//! each phase can be tested and reused (the RAdam baseline shares
//! [`rectification`]).

use crate::error::{NovakError, Result};
use crate::param::GradientSet;

use super::config::{AutoLrVariant, NesterovMode, OptimizerConfig};

/// Step count above which `β^t` and `1 − β^t` are evaluated through logarithms.
pub const LOG_FORM_THRESHOLD: u64 = 1000;

/// Lower clip of the ratio-based automatic learning-rate factor.
pub const AUTO_LR_MIN: f64 = 0.1;
/// Upper clip of the ratio-based automatic learning-rate factor.
pub const AUTO_LR_MAX: f64 = 2.0;

/// Per-step decay rates, warmed up exponentially when `adaptive_beta` is set.
pub fn effective_betas(t: u64, cfg: &OptimizerConfig) -> (f64, f64) {
    if !cfg.adaptive_beta {
        return (cfg.beta1, cfg.beta2);
    }
    let t = t as f64;
    (cfg.beta1 * (1.0 - (-t / cfg.tau1).exp()), cfg.beta2 * (1.0 - (-t / cfg.tau2).exp()))
}

/// `β^t`, switching to `exp(t ln β)` for large `t`.
pub fn beta_power(beta: f64, t: u64) -> f64 {
    if t > LOG_FORM_THRESHOLD {
        (t as f64 * beta.ln()).exp()
    } else {
        beta.powi(t as i32)
    }
}

/// Bias-correction denominator `1 − β^t`.
///
/// For large `t` this is computed as `−expm1(t ln β)`, which neither
/// underflows nor loses digits to cancellation.
pub fn bias_denominator(beta: f64, t: u64) -> Result<f64> {
    if beta >= 1.0 {
        return Err(NovakError::config(format!("bias correction undefined for beta = {beta} (denominator is zero)")));
    }
    if t == 0 {
        return Err(NovakError::contract("bias correction needs t >= 1"));
    }
    Ok(if t > LOG_FORM_THRESHOLD { -(t as f64 * beta.ln()).exp_m1() } else { 1.0 - beta.powi(t as i32) })
}

/// One exponential-moving-average update of both moments.
pub fn update_moments(m: &[f64], v: &[f64], g: &[f64], beta1_t: f64, beta2_t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m.len() != g.len() || v.len() != g.len() {
        return Err(NovakError::dimension("moment update", g.len(), m.len().max(v.len())));
    }
    let mut m = m.to_vec();
    let mut v = v.to_vec();
    update_moments_in_place(&mut m, &mut v, g, beta1_t, beta2_t);
    Ok((m, v))
}

/// In-place moment update. Each result is kept inside the closed interval
/// spanned by its two operands, which is where the exact convex combination
/// lies; this stops rounding from nudging a moment past the gradient bound.
pub(crate) fn update_moments_in_place(m: &mut [f64], v: &mut [f64], g: &[f64], beta1_t: f64, beta2_t: f64) {
    let (c1, c2) = (1.0 - beta1_t, 1.0 - beta2_t);
    for ((mi, vi), &gi) in m.iter_mut().zip(v.iter_mut()).zip(g) {
        let g2 = gi * gi;
        *mi = convex(beta1_t * *mi + c1 * gi, *mi, gi);
        *vi = convex(beta2_t * *vi + c2 * g2, *vi, g2);
    }
}

#[inline]
fn convex(x: f64, a: f64, b: f64) -> f64 {
    x.clamp(a.min(b), a.max(b))
}

/// Bias-corrected copies of both moments.
pub fn bias_correct(m: &[f64], v: &[f64], t: u64, beta1: f64, beta2: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let d1 = bias_denominator(beta1, t)?;
    let d2 = bias_denominator(beta2, t)?;
    Ok((m.iter().map(|x| x / d1).collect(), v.iter().map(|x| x / d2).collect()))
}

/// Variance-rectification terms for step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectification {
    pub rho_inf: f64,
    pub rho_t: f64,
    /// Whether the rectified branch is taken (`ρ_t ≥ 5`).
    pub rectify: bool,
    /// Present only on the rectified branch; always in `(0, 1]`.
    pub r_t: Option<f64>,
}

/// Threshold on `ρ_t` above which the variance estimate is trusted.
pub const RECTIFY_THRESHOLD: f64 = 5.0;

pub fn rectification(t: u64, beta2: f64) -> Rectification {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let power = beta_power(beta2, t);
    let denom = if t > LOG_FORM_THRESHOLD { -(t as f64 * beta2.ln()).exp_m1() } else { 1.0 - power };
    let rho_t = rho_inf - 2.0 * t as f64 * power / denom;
    let rectify = rho_t >= RECTIFY_THRESHOLD;
    let r_t = rectify.then(|| {
        let num = (rho_t - 4.0) * (rho_t - 2.0) * rho_inf;
        let den = (rho_inf - 4.0) * (rho_inf - 2.0) * rho_t;
        // ρ_t ≤ ρ_∞ makes the ratio at most one; rounding can overshoot by an ulp.
        (num / den).sqrt().min(1.0)
    });
    Rectification { rho_inf, rho_t, rectify, r_t }
}

/// Effective step size applied to the raw first moment.
///
/// `α·r_t/(1−β₁ᵗ)` on the rectified branch, `α/(1−β₁ᵗ)` otherwise, times the
/// trust and auto-LR factors when given.
pub fn effective_lr(
    cfg: &OptimizerConfig,
    t: u64,
    rect: Option<&Rectification>,
    trust: Option<f64>,
    auto: Option<f64>,
) -> Result<f64> {
    let d1 = bias_denominator(cfg.beta1, t)?;
    let r = rect.and_then(|r| r.r_t).unwrap_or(1.0);
    Ok(cfg.alpha * r / d1 * trust.unwrap_or(1.0) * auto.unwrap_or(1.0))
}

/// Subtracts from every leading-axis slice its mean over the remaining axes.
/// Rank-0/1 shapes are returned unchanged.
pub fn centralize_gradient(g: &[f64], shape: &[usize]) -> Result<Vec<f64>> {
    let expected: usize = shape.iter().product();
    if expected != g.len() {
        return Err(NovakError::dimension("gradient centralization", expected, g.len()));
    }
    let mut out = g.to_vec();
    if shape.len() > 1 {
        centralize_in_place(&mut out, shape[0]);
    }
    Ok(out)
}

pub(crate) fn centralize_in_place(g: &mut [f64], leading: usize) {
    let slice = g.len() / leading;
    for chunk in g.chunks_mut(slice) {
        let mean = chunk.iter().sum::<f64>() / slice as f64;
        chunk.iter_mut().for_each(|x| *x -= mean);
    }
}

/// Rescales the whole gradient set so its global norm is at most `c`.
pub fn clip_gradient_global(grads: &GradientSet, c: f64) -> GradientSet {
    let mut out = grads.clone();
    clip_in_place(&mut out, c);
    out
}

/// Returns the pre-clip global norm.
pub(crate) fn clip_in_place(grads: &mut GradientSet, c: f64) -> f64 {
    let total = grads.global_norm();
    if total > c {
        let scale = c / total;
        for g in grads.groups_mut() {
            g.iter_mut().for_each(|x| *x *= scale);
        }
    }
    total
}

/// Taylor surrogate `g + β_N (g − m_{t−1})` for the extrapolated gradient.
pub fn nesterov_approximation(g: &[f64], m_prev: &[f64], beta_n: f64) -> Vec<f64> {
    g.iter().zip(m_prev).map(|(&gi, &mi)| gi + beta_n * (gi - mi)).collect()
}

/// Gradient transform for the selected Nesterov mode on a single vector.
///
/// In true mode (while `t ≤ n_taylor`) `theta` is moved to `θ + β_N m_prev`,
/// the closure is evaluated there, and `theta` is restored bit-for-bit before
/// returning. After `n_taylor` steps true mode falls back to the approximation.
/// Classical mode leaves the gradient alone; its blending happens on the
/// update direction.
#[allow(clippy::too_many_arguments)]
pub fn nesterov_transform(
    mode: NesterovMode,
    theta: &mut [f64],
    g: &[f64],
    m_prev: &[f64],
    beta_n: f64,
    t: u64,
    n_taylor: u64,
    closure: Option<&mut dyn FnMut(&[f64]) -> Vec<f64>>,
) -> Result<(Vec<f64>, bool)> {
    if g.len() != m_prev.len() || g.len() != theta.len() {
        return Err(NovakError::dimension("nesterov transform", g.len(), m_prev.len()));
    }
    match mode {
        NesterovMode::None | NesterovMode::Classical => Ok((g.to_vec(), false)),
        NesterovMode::Approximation => Ok((nesterov_approximation(g, m_prev, beta_n), false)),
        NesterovMode::True if t > n_taylor => Ok((nesterov_approximation(g, m_prev, beta_n), false)),
        NesterovMode::True => {
            let closure = closure.ok_or_else(|| NovakError::config("true Nesterov mode needs a gradient closure"))?;
            let original = theta.to_vec();
            theta.iter_mut().zip(m_prev).for_each(|(x, &m)| *x += beta_n * m);
            let g_tilde = closure(theta);
            theta.copy_from_slice(&original);
            if g_tilde.len() != g.len() {
                return Err(NovakError::dimension("closure gradient", g.len(), g_tilde.len()));
            }
            Ok((g_tilde, true))
        }
    }
}

/// `β₁ m̂ + (1 − β₁) u`.
pub fn classical_nesterov_blend(m_hat: &[f64], u: &[f64], beta1: f64) -> Vec<f64> {
    m_hat.iter().zip(u).map(|(&m, &ui)| beta1 * m + (1.0 - beta1) * ui).collect()
}

/// Layer trust ratio `clip(‖θ‖/‖u‖, lo, hi)`; 1 when either norm is zero.
pub fn trust_ratio(theta_norm: f64, u_norm: f64, clip: (f64, f64)) -> f64 {
    if theta_norm == 0.0 || u_norm == 0.0 {
        return 1.0;
    }
    (theta_norm / u_norm).clamp(clip.0, clip.1)
}

/// Smoothed gradient and parameter norms for automatic LR scaling.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AutoLrState {
    pub g_ema: f64,
    pub theta_ema: f64,
}

/// Updates the norm EMAs and returns the automatic LR factor.
pub fn auto_lr_scale(state: &AutoLrState, g_norm: f64, theta_norm: f64, cfg: &OptimizerConfig) -> (f64, AutoLrState) {
    let gamma = cfg.auto_lr_gamma;
    let next = AutoLrState {
        g_ema: gamma * g_norm + (1.0 - gamma) * state.g_ema,
        theta_ema: gamma * theta_norm + (1.0 - gamma) * state.theta_ema,
    };
    let scale = match cfg.auto_lr_variant {
        AutoLrVariant::RatioClip => {
            if next.theta_ema > 0.0 {
                (next.g_ema / next.theta_ema).clamp(AUTO_LR_MIN, AUTO_LR_MAX)
            } else {
                1.0
            }
        }
        AutoLrVariant::LogEma => 1.0 / (1.0 + next.g_ema.max(1.0).ln()),
    };
    (scale, next)
}

/// Zeroes every component whose magnitude does not exceed `tau`.
pub fn sparse_threshold(u: &[f64], tau: f64) -> Vec<f64> {
    u.iter().map(|&x| if x.abs() > tau { x } else { 0.0 }).collect()
}
