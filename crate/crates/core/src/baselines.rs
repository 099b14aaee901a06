//! Reference optimizers used for comparison runs: SGD with momentum, Adam,
//! AdamW, RAdam and Lookahead wrapped around Adam.
//!
//! All adaptive baselines put ε inside the square root, like [`Novak`](crate::Novak),
//! so that the reduced configurations of the latter match them exactly. The
//! RAdam unrectified branch keeps the adaptive denominator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NovakError, Result};
use crate::lookahead::{CensusEntry, LookaheadState, MemoryCensus, StateComponent};
use crate::novak::ops::{self, Rectification};
use crate::novak::LookaheadMode;
use crate::optim::{Optimizer, StepReport};
use crate::param::{GradientSet, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SgdMomentum,
    Adam,
    #[serde(rename = "adamw")]
    AdamW,
    #[serde(rename = "radam")]
    RAdam,
    LookaheadAdam,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::SgdMomentum,
        BaselineKind::Adam,
        BaselineKind::AdamW,
        BaselineKind::RAdam,
        BaselineKind::LookaheadAdam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::SgdMomentum => "sgd_momentum",
            BaselineKind::Adam => "adam",
            BaselineKind::AdamW => "adamw",
            BaselineKind::RAdam => "radam",
            BaselineKind::LookaheadAdam => "lookahead_adam",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = NovakError;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| NovakError::config(format!("unknown baseline optimizer `{s}`")))
    }
}

/// Hyperparameters for a baseline. Fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::beta1")]
    pub beta1: f64,
    #[serde(default = "defaults::beta2")]
    pub beta2: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub weight_decay: f64,
    /// SGD momentum coefficient.
    #[serde(default = "defaults::momentum")]
    pub momentum: f64,
    #[serde(default = "defaults::lookahead_alpha")]
    pub lookahead_alpha: f64,
    #[serde(default = "defaults::lookahead_k")]
    pub lookahead_k: usize,
}

mod defaults {
    pub fn alpha() -> f64 {
        1e-3
    }
    pub fn beta1() -> f64 {
        0.9
    }
    pub fn beta2() -> f64 {
        0.999
    }
    pub fn epsilon() -> f64 {
        1e-8
    }
    pub fn momentum() -> f64 {
        0.9
    }
    pub fn lookahead_alpha() -> f64 {
        0.5
    }
    pub fn lookahead_k() -> usize {
        5
    }
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind) -> Self {
        let mut cfg = Self {
            kind,
            alpha: defaults::alpha(),
            beta1: defaults::beta1(),
            beta2: defaults::beta2(),
            epsilon: defaults::epsilon(),
            weight_decay: 0.0,
            momentum: defaults::momentum(),
            lookahead_alpha: defaults::lookahead_alpha(),
            lookahead_k: defaults::lookahead_k(),
        };
        if kind == BaselineKind::AdamW {
            cfg.weight_decay = 0.01;
        }
        if kind == BaselineKind::SgdMomentum {
            cfg.alpha = 0.01;
        }
        cfg
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        let fail = |msg: String| Err(NovakError::config(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return fail(format!("beta1 and beta2 must lie in [0, 1), got {} and {}", self.beta1, self.beta2));
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !unit(self.momentum) {
            return fail(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.lookahead_alpha > 0.0 && self.lookahead_alpha < 1.0) {
            return fail(format!("lookahead_alpha must lie in (0, 1), got {}", self.lookahead_alpha));
        }
        if self.lookahead_k == 0 {
            return fail("lookahead_k must be at least 1".into());
        }
        if self.kind == BaselineKind::RAdam && self.beta2 >= 1.0 - 1e-8 {
            return fail(format!("radam needs beta2 < 1 - 1e-8, got {}", self.beta2));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum BaselineState {
    Sgd { velocity: Vec<Vec<f64>> },
    Adaptive { m: Vec<Vec<f64>>, v: Vec<Vec<f64>>, lookahead: Option<LookaheadState> },
}

/// A baseline optimizer instance.
#[derive(Debug, Clone)]
pub struct Baseline {
    cfg: BaselineConfig,
    t: u64,
    state: BaselineState,
}

impl Baseline {
    pub fn new(cfg: BaselineConfig, model: &Model) -> Result<Self> {
        cfg.validate()?;
        let zeros = || -> Vec<Vec<f64>> { model.groups().iter().map(|g| vec![0.0; g.len()]).collect() };
        let state = match cfg.kind {
            BaselineKind::SgdMomentum => BaselineState::Sgd { velocity: zeros() },
            kind => BaselineState::Adaptive {
                m: zeros(),
                v: zeros(),
                lookahead: (kind == BaselineKind::LookaheadAdam)
                    .then(|| LookaheadState::new(LookaheadMode::Basic, model)),
            },
        };
        Ok(Self { cfg, t: 0, state })
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.cfg
    }

    pub fn kind(&self) -> BaselineKind {
        self.cfg.kind
    }

    /// First and second moments of adaptive baselines.
    pub fn moments(&self) -> Option<(&[Vec<f64>], &[Vec<f64>])> {
        match &self.state {
            BaselineState::Adaptive { m, v, .. } => Some((m, v)),
            BaselineState::Sgd { .. } => None,
        }
    }

    pub fn step(&mut self, model: &mut Model, grads: &GradientSet) -> Result<StepReport> {
        grads.check_matches(model)?;
        for (group, g) in model.groups().iter().zip(grads.groups()) {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(NovakError::Numeric(format!("gradient of group `{}`", group.name())));
            }
        }
        let cfg = &self.cfg;
        let t = self.t + 1;
        let grad_norm = grads.global_norm();
        let mut update_norms = Vec::with_capacity(model.groups().len());
        let mut report =
            StepReport { t, grad_norm, trust_ratios: vec![1.0; model.groups().len()], ..Default::default() };

        match (&mut self.state, cfg.kind) {
            (BaselineState::Sgd { velocity }, BaselineKind::SgdMomentum) => {
                for ((group, vel), g) in model.groups_mut().iter_mut().zip(velocity).zip(grads.groups()) {
                    let mut sq = 0.0;
                    for ((x, vi), &gi) in group.values_mut().iter_mut().zip(vel.iter_mut()).zip(g) {
                        let gi = gi + cfg.weight_decay * *x;
                        *vi = cfg.momentum * *vi + gi;
                        let dx = cfg.alpha * *vi;
                        *x -= dx;
                        sq += dx * dx;
                    }
                    update_norms.push(sq.sqrt());
                }
                report.effective_lr = cfg.alpha;
            }
            (BaselineState::Adaptive { m, v, lookahead }, kind) if kind != BaselineKind::SgdMomentum => {
                let d1 = ops::bias_denominator(cfg.beta1, t)?;
                let d2 = ops::bias_denominator(cfg.beta2, t)?;
                let rect: Option<Rectification> =
                    (kind == BaselineKind::RAdam).then(|| ops::rectification(t, cfg.beta2));
                let r = rect.and_then(|r| r.r_t).unwrap_or(1.0);
                let coupled = if kind == BaselineKind::AdamW { 0.0 } else { cfg.weight_decay };
                let decay = (kind == BaselineKind::AdamW && cfg.weight_decay > 0.0)
                    .then_some(1.0 - cfg.alpha * cfg.weight_decay);
                let mut g_eff = Vec::new();
                for (((group, mi), vi), g) in
                    model.groups_mut().iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(grads.groups())
                {
                    g_eff.clear();
                    g_eff.extend(g.iter().zip(group.values()).map(|(&gi, &x)| gi + coupled * x));
                    ops::update_moments_in_place(mi, vi, &g_eff, cfg.beta1, cfg.beta2);
                    let scale = cfg.alpha * r;
                    let mut sq = 0.0;
                    for ((x, &mj), &vj) in group.values_mut().iter_mut().zip(mi.iter()).zip(vi.iter()) {
                        let before = *x;
                        if let Some(f) = decay {
                            *x *= f;
                        }
                        *x -= scale * ((mj / d1) / (vj / d2 + cfg.epsilon).sqrt());
                        let dx = *x - before;
                        sq += dx * dx;
                    }
                    update_norms.push(sq.sqrt());
                }
                report.effective_lr = cfg.alpha * r / d1;
                report.rho_t = rect.map(|r| r.rho_t);
                report.r_t = rect.and_then(|r| r.r_t);
                if let Some(la) = lookahead {
                    report.synchronized = la.after_inner_step(model, cfg.lookahead_alpha, cfg.lookahead_k)?;
                }
            }
            _ => return Err(NovakError::contract(format!("baseline state does not match kind {}", cfg.kind))),
        }
        self.t = t;
        report.update_norms = update_norms;
        Ok(report)
    }

    pub fn census(&self, model: &Model) -> MemoryCensus {
        let mut entries = vec![CensusEntry::persistent(StateComponent::Parameters)];
        match &self.state {
            BaselineState::Sgd { .. } => {
                entries.push(CensusEntry::persistent(StateComponent::Momentum));
            }
            BaselineState::Adaptive { lookahead, .. } => {
                entries.push(CensusEntry::persistent(StateComponent::FirstMoment));
                entries.push(CensusEntry::persistent(StateComponent::SecondMoment));
                if let Some(la) = lookahead {
                    entries.extend(la.census_entries());
                }
            }
        }
        MemoryCensus { entries, vector_len: model.num_params() }
    }
}

impl Optimizer for Baseline {
    fn name(&self) -> &str {
        self.cfg.kind.as_str()
    }

    fn step(&mut self, model: &mut Model, grads: &GradientSet) -> Result<StepReport> {
        Baseline::step(self, model, grads)
    }

    fn census(&self, model: &Model) -> MemoryCensus {
        Baseline::census(self, model)
    }

    fn second_moments(&self) -> Option<&[Vec<f64>]> {
        self.moments().map(|(_, v)| v)
    }
}
