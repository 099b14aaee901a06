//! The optimizer: moment estimation with optional warmup, bias correction,
//! rectification, Nesterov variants, decoupled weight decay, layer trust
//! ratios, automatic LR scaling, sparse updates and lookahead.
//!
//! A step runs ten phases in order:
//!
//! 1. true-Nesterov gradient re-evaluation through a closure (early steps only)
//! 2. gradient processing: coupled L2 (if decay is not decoupled),
//!    centralization, global clipping, Nesterov approximation
//! 3. per-step decay rates
//! 4. moment update
//! 5. bias correction
//! 6. rectification
//! 7. trust ratio and auto-LR (full-features mode only)
//! 8. update direction `u = m̂/√(v̂+ε)`, sparse threshold, classical blend
//! 9. `θ ← θ(1 − αλ) − α·r_t·λ_trust·α_auto·u`
//! 10. lookahead
//!
//! ε sits inside the square root everywhere. The decay in phase 9 uses the
//! base rate `α`, never the rectified one, so a zero-gradient trajectory is
//! exactly `(1 − αλ)ᵗ θ₀`.

mod config;
pub mod ops;

pub use config::{AutoLrVariant, LookaheadMode, NesterovMode, OptimizerConfig, Preset};
pub use ops::{AutoLrState, Rectification};

use crate::error::{NovakError, Result};
use crate::lookahead::{state_memory_census, LookaheadState, MemoryCensus};
use crate::optim::{GradientClosure, Optimizer, StepReport};
use crate::param::{norm, GradientSet, Model};

/// First/second moments and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    /// Cached `β₁ᵗ`.
    pub beta1_power: f64,
    /// Cached `β₂ᵗ`.
    pub beta2_power: f64,
}

impl MomentState {
    pub fn zeros(model: &Model) -> Self {
        let zeros: Vec<Vec<f64>> = model.groups().iter().map(|g| vec![0.0; g.len()]).collect();
        Self { m: zeros.clone(), v: zeros, t: 0, beta1_power: 1.0, beta2_power: 1.0 }
    }
}

/// The optimizer. Owns its state; one instance drives one model.
#[derive(Debug, Clone)]
pub struct Novak {
    cfg: OptimizerConfig,
    warnings: Vec<String>,
    moments: MomentState,
    auto_lr: AutoLrState,
    lookahead: LookaheadState,
}

impl Novak {
    /// Validates `cfg` and allocates state shaped like `model`.
    pub fn new(cfg: OptimizerConfig, model: &Model) -> Result<Self> {
        let (cfg, warnings) = cfg.validated()?;
        Ok(Self {
            moments: MomentState::zeros(model),
            auto_lr: AutoLrState::default(),
            lookahead: LookaheadState::new(cfg.lookahead_mode, model),
            cfg,
            warnings,
        })
    }

    /// The configuration after validation and fast-path downgrades.
    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    /// Substitutions made while validating the configuration.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn moments(&self) -> &MomentState {
        &self.moments
    }

    pub fn auto_lr_state(&self) -> AutoLrState {
        self.auto_lr
    }

    pub fn lookahead(&self) -> &LookaheadState {
        &self.lookahead
    }

    pub fn step(&mut self, model: &mut Model, grads: &GradientSet) -> Result<StepReport> {
        self.run_step(model, grads, None)
    }

    pub fn step_with_closure(
        &mut self,
        model: &mut Model,
        grads: &GradientSet,
        closure: &mut GradientClosure<'_>,
    ) -> Result<StepReport> {
        self.run_step(model, grads, Some(closure))
    }

    pub fn census(&self, model: &Model) -> MemoryCensus {
        state_memory_census(&self.lookahead, model.num_params())
    }

    fn run_step(
        &mut self,
        model: &mut Model,
        grads: &GradientSet,
        closure: Option<&mut GradientClosure<'_>>,
    ) -> Result<StepReport> {
        grads.check_matches(model)?;
        check_finite(model, grads)?;
        if self.moments.m.len() != model.groups().len() {
            return Err(NovakError::dimension(
                "optimizer state group count",
                self.moments.m.len(),
                model.groups().len(),
            ));
        }
        let cfg = &self.cfg;
        let t = self.moments.t + 1;

        // Phase 1
        let true_nesterov_now = cfg.nesterov_mode == NesterovMode::True && t <= cfg.n_taylor;
        let mut g = if true_nesterov_now {
            let closure = closure.ok_or_else(|| NovakError::config("true Nesterov mode needs a gradient closure"))?;
            let original = model.snapshot();
            for (group, m) in model.groups_mut().iter_mut().zip(&self.moments.m) {
                for (x, &mi) in group.values_mut().iter_mut().zip(m) {
                    *x += cfg.nesterov_coeff * mi;
                }
            }
            let g_tilde = closure(model);
            model.restore(&original)?;
            g_tilde.check_matches(model)?;
            check_finite(model, &g_tilde)?;
            g_tilde
        } else {
            grads.clone()
        };

        // Phase 2
        if !cfg.decoupled_decay && cfg.weight_decay > 0.0 {
            for (gi, group) in g.groups_mut().iter_mut().zip(model.groups()) {
                for (x, &p) in gi.iter_mut().zip(group.values()) {
                    *x += cfg.weight_decay * p;
                }
            }
        }
        if cfg.use_gc {
            for (gi, group) in g.groups_mut().iter_mut().zip(model.groups()) {
                if group.shape().len() > 1 {
                    ops::centralize_in_place(gi, group.shape()[0]);
                }
            }
        }
        let grad_norm = match cfg.clip_threshold {
            Some(c) => ops::clip_in_place(&mut g, c),
            None => g.global_norm(),
        };
        let approximate = match cfg.nesterov_mode {
            NesterovMode::Approximation => true,
            NesterovMode::True => !true_nesterov_now,
            _ => false,
        };
        if approximate {
            let beta_n = cfg.nesterov_coeff;
            for (gi, m) in g.groups_mut().iter_mut().zip(&self.moments.m) {
                for (x, &mi) in gi.iter_mut().zip(m) {
                    *x += beta_n * (*x - mi);
                }
            }
        }

        // Phases 3-4
        let (beta1_t, beta2_t) = ops::effective_betas(t, cfg);
        for ((m, v), gi) in self.moments.m.iter_mut().zip(self.moments.v.iter_mut()).zip(g.groups()) {
            ops::update_moments_in_place(m, v, gi, beta1_t, beta2_t);
        }

        // Phase 5
        let d1 = ops::bias_denominator(cfg.beta1, t)?;
        let d2 = ops::bias_denominator(cfg.beta2, t)?;
        self.moments.beta1_power = ops::beta_power(cfg.beta1, t);
        self.moments.beta2_power = ops::beta_power(cfg.beta2, t);
        self.moments.t = t;

        // Phase 6
        let rect = cfg.rectified.then(|| ops::rectification(t, cfg.beta2));
        let r = rect.and_then(|r| r.r_t).unwrap_or(1.0);

        // Phase 7
        let auto = if cfg.full_features_mode && cfg.auto_lr {
            let theta_norm = norm(&model.flatten());
            let (scale, next) = ops::auto_lr_scale(&self.auto_lr, g.global_norm(), theta_norm, cfg);
            self.auto_lr = next;
            Some(scale)
        } else {
            None
        };
        let layer_adaptation = cfg.full_features_mode && cfg.layer_adaptation;
        let effective_lr = ops::effective_lr(cfg, t, rect.as_ref(), None, auto)?;

        // Phases 8-9
        let decay =
            if cfg.decoupled_decay && cfg.weight_decay > 0.0 { Some(1.0 - cfg.alpha * cfg.weight_decay) } else { None };
        let mut update_norms = Vec::with_capacity(model.groups().len());
        let mut trust_ratios = Vec::with_capacity(model.groups().len());
        let mut u = Vec::new();
        for ((group, m), v) in model.groups_mut().iter_mut().zip(&self.moments.m).zip(&self.moments.v) {
            u.clear();
            u.extend(m.iter().zip(v).map(|(&mi, &vi)| (mi / d1) / (vi / d2 + cfg.epsilon).sqrt()));
            let trust =
                if layer_adaptation { ops::trust_ratio(norm(group.values()), norm(&u), cfg.trust_clip) } else { 1.0 };
            trust_ratios.push(trust);
            if cfg.sparse_threshold > 0.0 {
                let tau = cfg.sparse_threshold;
                u.iter_mut().filter(|x| x.abs() <= tau).for_each(|x| *x = 0.0);
            }
            if cfg.nesterov_mode == NesterovMode::Classical {
                let b1 = cfg.beta1;
                for (ui, &mi) in u.iter_mut().zip(m) {
                    *ui = b1 * (mi / d1) + (1.0 - b1) * *ui;
                }
            }
            let scale = cfg.alpha * r * trust * auto.unwrap_or(1.0);
            let mut sq = 0.0;
            for (x, &ui) in group.values_mut().iter_mut().zip(&u) {
                let before = *x;
                if let Some(f) = decay {
                    *x *= f;
                }
                *x -= scale * ui;
                let dx = *x - before;
                sq += dx * dx;
            }
            update_norms.push(sq.sqrt());
        }

        // Phase 10
        let synchronized = self.lookahead.after_inner_step(model, cfg.lookahead_alpha, cfg.lookahead_k)?;

        Ok(StepReport {
            t,
            effective_lr,
            rho_t: rect.map(|r| r.rho_t),
            r_t: rect.and_then(|r| r.r_t),
            grad_norm,
            update_norms,
            trust_ratios,
            auto_lr: auto,
            used_closure: true_nesterov_now,
            synchronized,
        })
    }
}

fn check_finite(model: &Model, grads: &GradientSet) -> Result<()> {
    for (group, g) in model.groups().iter().zip(grads.groups()) {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(NovakError::Numeric(format!("gradient of group `{}`", group.name())));
        }
    }
    Ok(())
}

impl Optimizer for Novak {
    fn name(&self) -> &str {
        "novak"
    }

    fn step(&mut self, model: &mut Model, grads: &GradientSet) -> Result<StepReport> {
        Novak::step(self, model, grads)
    }

    fn step_with_closure(
        &mut self,
        model: &mut Model,
        grads: &GradientSet,
        closure: &mut GradientClosure<'_>,
    ) -> Result<StepReport> {
        Novak::step_with_closure(self, model, grads, closure)
    }

    fn census(&self, model: &Model) -> MemoryCensus {
        Novak::census(self, model)
    }

    fn second_moments(&self) -> Option<&[Vec<f64>]> {
        Some(&self.moments.v)
    }
}

#[cfg(test)]
mod tests;
