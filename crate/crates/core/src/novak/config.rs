use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NovakError, Result};

/// How the gradient is extrapolated along the momentum direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NesterovMode {
    /// Re-evaluate the gradient at the extrapolated point through a closure.
    #[serde(rename = "true", alias = "true_nesterov")]
    True,
    /// First-order Taylor surrogate `g + β_N (g − m_{t−1})`.
    Approximation,
    /// Momentum blending of the normalized update.
    Classical,
    None,
}

/// Slow/fast weight synchronization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LookaheadMode {
    MemoryEfficient,
    Basic,
    None,
}

impl FromStr for LookaheadMode {
    type Err = NovakError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memory_efficient" => Ok(Self::MemoryEfficient),
            "basic" => Ok(Self::Basic),
            "none" => Ok(Self::None),
            "gradient_avg" | "stochastic" => Err(NovakError::config(format!(
                "lookahead mode `{s}` is not implemented (no update rule is defined for it); \
                 use memory_efficient, basic or none"
            ))),
            other => Err(NovakError::config(format!("unknown lookahead mode `{other}`"))),
        }
    }
}

impl TryFrom<String> for LookaheadMode {
    type Error = NovakError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LookaheadMode> for String {
    fn from(mode: LookaheadMode) -> String {
        mode.to_string()
    }
}

impl fmt::Display for LookaheadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MemoryEfficient => "memory_efficient",
            Self::Basic => "basic",
            Self::None => "none",
        })
    }
}

/// Which automatic learning-rate formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoLrVariant {
    /// `clip(ḡ/θ̄, 0.1, 2)` over smoothed gradient and parameter norms.
    RatioClip,
    /// `1 / (1 + ln ḡ)` with the logarithm argument floored at 1.
    LogEma,
}

/// All hyperparameters and feature switches of the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub epsilon: f64,
    pub nesterov_mode: NesterovMode,
    pub nesterov_coeff: f64,
    pub n_taylor: u64,
    pub lookahead_mode: LookaheadMode,
    pub lookahead_alpha: f64,
    pub lookahead_k: usize,
    pub rectified: bool,
    pub decoupled_decay: bool,
    pub adaptive_beta: bool,
    pub tau1: f64,
    pub tau2: f64,
    pub use_gc: bool,
    /// Global gradient-norm clipping threshold; `None` disables clipping.
    /// In config files, `clip_threshold = "disabled"` (or `false`) turns it off.
    #[serde(with = "clip_repr")]
    pub clip_threshold: Option<f64>,
    /// Sparse-update threshold; 0 disables it.
    pub sparse_threshold: f64,
    pub layer_adaptation: bool,
    pub auto_lr: bool,
    pub auto_lr_variant: AutoLrVariant,
    pub auto_lr_gamma: f64,
    pub trust_clip: (f64, f64),
    pub full_features_mode: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.01,
            epsilon: 1e-8,
            nesterov_mode: NesterovMode::Approximation,
            nesterov_coeff: 0.9,
            n_taylor: 150,
            lookahead_mode: LookaheadMode::MemoryEfficient,
            lookahead_alpha: 0.5,
            lookahead_k: 10,
            rectified: true,
            decoupled_decay: true,
            adaptive_beta: false,
            tau1: 1000.0,
            tau2: 5000.0,
            use_gc: false,
            clip_threshold: Some(1.0),
            sparse_threshold: 0.0,
            layer_adaptation: false,
            auto_lr: false,
            auto_lr_variant: AutoLrVariant::RatioClip,
            auto_lr_gamma: 0.1,
            trust_clip: (0.1, 10.0),
            full_features_mode: false,
        }
    }
}

impl OptimizerConfig {
    /// Configuration under which the optimizer is plain Adam (ε inside the root).
    pub fn adam_reduction(alpha: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            alpha,
            beta1,
            beta2,
            epsilon,
            weight_decay: 0.0,
            nesterov_mode: NesterovMode::None,
            lookahead_mode: LookaheadMode::None,
            rectified: false,
            adaptive_beta: false,
            clip_threshold: None,
            ..Self::default()
        }
    }

    /// Adam plus rectification: the RAdam reduction.
    pub fn radam_reduction(alpha: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self { rectified: true, ..Self::adam_reduction(alpha, beta1, beta2, epsilon) }
    }

    /// Checks numeric ranges and applies the fast-path downgrades.
    ///
    /// Without `full_features_mode`, true Nesterov becomes the approximation,
    /// basic lookahead becomes memory-efficient, and layer adaptation / auto-LR
    /// are switched off. Each substitution is returned as a warning and logged.
    pub fn validated(mut self) -> Result<(Self, Vec<String>)> {
        self.check_ranges()?;
        let mut warnings = Vec::new();
        if !self.full_features_mode {
            if self.nesterov_mode == NesterovMode::True {
                self.nesterov_mode = NesterovMode::Approximation;
                warnings.push("true Nesterov requires full_features_mode; using approximation".to_string());
            }
            if self.lookahead_mode == LookaheadMode::Basic {
                self.lookahead_mode = LookaheadMode::MemoryEfficient;
                warnings.push("basic lookahead requires full_features_mode; using memory_efficient".to_string());
            }
            if self.layer_adaptation {
                self.layer_adaptation = false;
                warnings.push("layer_adaptation requires full_features_mode; disabled".to_string());
            }
            if self.auto_lr {
                self.auto_lr = false;
                warnings.push("auto_lr requires full_features_mode; disabled".to_string());
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok((self, warnings))
    }

    fn check_ranges(&self) -> Result<()> {
        fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(NovakError::config(msg()))
            }
        }
        let unit = |x: f64| (0.0..1.0).contains(&x);
        ensure(self.alpha > 0.0 && self.alpha.is_finite(), || format!("alpha must be positive, got {}", self.alpha))?;
        ensure(unit(self.beta1), || format!("beta1 must lie in [0, 1), got {}", self.beta1))?;
        ensure(unit(self.beta2), || format!("beta2 must lie in [0, 1), got {}", self.beta2))?;
        ensure(self.weight_decay >= 0.0 && self.weight_decay.is_finite(), || {
            format!("weight_decay must be non-negative, got {}", self.weight_decay)
        })?;
        ensure(self.epsilon > 0.0 && self.epsilon.is_finite(), || {
            format!("epsilon must be positive, got {}", self.epsilon)
        })?;
        ensure(unit(self.nesterov_coeff), || {
            format!("nesterov_coeff must lie in [0, 1), got {}", self.nesterov_coeff)
        })?;
        ensure(self.n_taylor >= 1, || "n_taylor must be at least 1".to_string())?;
        ensure(self.lookahead_alpha > 0.0 && self.lookahead_alpha < 1.0, || {
            format!("lookahead_alpha must lie in (0, 1), got {}", self.lookahead_alpha)
        })?;
        ensure(self.lookahead_k >= 1, || "lookahead_k must be at least 1".to_string())?;
        ensure(self.tau1 > 0.0 && self.tau2 > 0.0, || {
            format!("tau1 and tau2 must be positive, got {} and {}", self.tau1, self.tau2)
        })?;
        if let Some(c) = self.clip_threshold {
            ensure(c > 0.0, || format!("clip_threshold must be positive, got {c}"))?;
        }
        ensure(self.sparse_threshold >= 0.0, || {
            format!("sparse_threshold must be non-negative, got {}", self.sparse_threshold)
        })?;
        ensure(self.auto_lr_gamma > 0.0 && self.auto_lr_gamma <= 1.0, || {
            format!("auto_lr_gamma must lie in (0, 1], got {}", self.auto_lr_gamma)
        })?;
        let (lo, hi) = self.trust_clip;
        ensure(lo > 0.0 && hi >= lo, || format!("trust_clip must satisfy 0 < lower <= upper, got ({lo}, {hi})"))?;
        if self.rectified {
            ensure(self.beta2 < 1.0 - 1e-8, || format!("rectification needs beta2 < 1 - 1e-8, got {}", self.beta2))?;
        }
        Ok(())
    }
}

mod clip_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Value(f64),
        Flag(bool),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(c) => Repr::Value(*c),
            None => Repr::Word("disabled".into()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Value(c) => Ok(Some(c)),
            Repr::Flag(false) => Ok(None),
            Repr::Word(w) if w == "disabled" || w == "none" => Ok(None),
            _ => Err(serde::de::Error::custom("clip_threshold must be a positive number, false, or \"disabled\"")),
        }
    }
}

/// Task-specific starting points.
///
/// Where a recommendation is a range the lower end of the learning rate and
/// weight decay range is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    ComputerVision,
    VisionTransformer,
    NlpTransformer,
    Gan,
    ReinforcementLearning,
    FineTuning,
    FewShot,
}

impl Preset {
    pub fn config(self) -> OptimizerConfig {
        let base = OptimizerConfig::default();
        match self {
            Preset::ComputerVision => {
                OptimizerConfig { alpha: 1e-3, weight_decay: 0.01, lookahead_k: 10, use_gc: true, ..base }
            }
            Preset::VisionTransformer => OptimizerConfig {
                alpha: 5e-4,
                weight_decay: 0.05,
                lookahead_k: 5,
                layer_adaptation: true,
                full_features_mode: true,
                ..base
            },
            Preset::NlpTransformer => OptimizerConfig { alpha: 3e-4, weight_decay: 0.01, lookahead_k: 5, ..base },
            Preset::Gan => OptimizerConfig {
                alpha: 1e-4,
                beta1: 0.5,
                beta2: 0.999,
                weight_decay: 0.0,
                lookahead_k: 10,
                nesterov_mode: NesterovMode::Classical,
                adaptive_beta: true,
                ..base
            },
            Preset::ReinforcementLearning => OptimizerConfig {
                alpha: 3e-4,
                weight_decay: 0.0,
                lookahead_k: 10,
                auto_lr: true,
                clip_threshold: Some(1.0),
                full_features_mode: true,
                ..base
            },
            Preset::FineTuning => OptimizerConfig { alpha: 1e-5, weight_decay: 0.01, lookahead_k: 5, ..base },
            Preset::FewShot => OptimizerConfig {
                alpha: 1e-3,
                weight_decay: 0.001,
                lookahead_k: 5,
                nesterov_mode: NesterovMode::True,
                full_features_mode: true,
                ..base
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_without_warnings() {
        let (cfg, warnings) = OptimizerConfig::default().validated().unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cfg, OptimizerConfig::default());
    }

    #[test]
    fn range_violations_are_rejected() {
        let bad = [
            OptimizerConfig { alpha: 0.0, ..Default::default() },
            OptimizerConfig { beta1: 1.0, ..Default::default() },
            OptimizerConfig { beta2: -0.1, ..Default::default() },
            OptimizerConfig { weight_decay: -1e-3, ..Default::default() },
            OptimizerConfig { epsilon: 0.0, ..Default::default() },
            OptimizerConfig { nesterov_coeff: 1.0, ..Default::default() },
            OptimizerConfig { lookahead_alpha: 1.0, ..Default::default() },
            OptimizerConfig { lookahead_alpha: 0.0, ..Default::default() },
            OptimizerConfig { lookahead_k: 0, ..Default::default() },
            OptimizerConfig { clip_threshold: Some(0.0), ..Default::default() },
            OptimizerConfig { auto_lr_gamma: 0.0, ..Default::default() },
            OptimizerConfig { trust_clip: (0.0, 10.0), ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.clone().validated(), Err(NovakError::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn rectification_requires_beta2_margin() {
        let cfg = OptimizerConfig { beta2: 1.0 - 1e-9, ..Default::default() };
        assert!(cfg.clone().validated().is_err());
        let cfg = OptimizerConfig { rectified: false, ..cfg };
        assert!(cfg.validated().is_ok());
    }

    #[test]
    fn fast_path_downgrades_expensive_options() {
        let cfg = OptimizerConfig {
            nesterov_mode: NesterovMode::True,
            lookahead_mode: LookaheadMode::Basic,
            auto_lr: true,
            ..Default::default()
        };
        let (cfg, warnings) = cfg.validated().unwrap();
        assert_eq!(cfg.nesterov_mode, NesterovMode::Approximation);
        assert_eq!(cfg.lookahead_mode, LookaheadMode::MemoryEfficient);
        assert!(!cfg.auto_lr);
        assert_eq!(warnings.len(), 3);

        let full = OptimizerConfig {
            nesterov_mode: NesterovMode::True,
            lookahead_mode: LookaheadMode::Basic,
            full_features_mode: true,
            ..Default::default()
        };
        let (full, warnings) = full.validated().unwrap();
        assert_eq!(full.nesterov_mode, NesterovMode::True);
        assert_eq!(full.lookahead_mode, LookaheadMode::Basic);
        assert!(warnings.is_empty());
    }

    #[test]
    fn unimplemented_lookahead_variants_are_named_in_the_error() {
        for name in ["gradient_avg", "stochastic"] {
            let err = name.parse::<LookaheadMode>().unwrap_err().to_string();
            assert!(err.contains(name) && err.contains("not implemented"), "{err}");
        }
        assert!("sideways".parse::<LookaheadMode>().is_err());
    }

    #[test]
    fn presets_are_valid() {
        for preset in [
            Preset::ComputerVision,
            Preset::VisionTransformer,
            Preset::NlpTransformer,
            Preset::Gan,
            Preset::ReinforcementLearning,
            Preset::FineTuning,
            Preset::FewShot,
        ] {
            let (_, warnings) = preset.config().validated().unwrap();
            assert!(warnings.is_empty(), "{preset:?}: {warnings:?}");
        }
    }

    #[test]
    fn config_parses_from_toml_and_rejects_unknown_keys() {
        let cfg: OptimizerConfig =
            toml::from_str("alpha = 0.01\nnesterov_mode = \"classical\"\nlookahead_mode = \"basic\"\n").unwrap();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.nesterov_mode, NesterovMode::Classical);
        assert_eq!(cfg.lookahead_mode, LookaheadMode::Basic);
        assert!(toml::from_str::<OptimizerConfig>("alpah = 0.01\n").is_err());
        let off: OptimizerConfig = toml::from_str("clip_threshold = \"disabled\"\n").unwrap();
        assert_eq!(off.clip_threshold, None);
        let on: OptimizerConfig = toml::from_str("clip_threshold = 2.5\n").unwrap();
        assert_eq!(on.clip_threshold, Some(2.5));
        let err = toml::from_str::<OptimizerConfig>("lookahead_mode = \"stochastic\"\n").unwrap_err().to_string();
        assert!(err.contains("not implemented"), "{err}");
    }
}
