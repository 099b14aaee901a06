use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BaselineConfig};
use crate::error::{NovakError, Result};
use crate::novak::{Novak, OptimizerConfig};
use crate::optim::Optimizer;
use crate::param::Model;
use crate::problems::{DeepPlainMlp, LogisticRegression, Problem, Quadratic, Rosenbrock};

/// A complete experiment description, read from TOML.
///
/// ```toml
/// name = "quad-novak"
/// steps = 2000
/// log_every = 50
/// seeds = [0, 1, 2]
/// output = "results"
///
/// [problem.quadratic]
/// dimension = 50
/// condition_number = 100.0
///
/// [optimizer.novak]
/// alpha = 0.01
/// lookahead_mode = "none"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Prefix of the output files; defaults to `<problem>_<optimizer>`.
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub steps: usize,
    /// Mini-batch size. Absent means full-batch gradients.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Directory receiving one CSV per seed.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub early_stop: Option<EarlyStop>,
    /// Record wall-clock time per logged step. Off by default so that
    /// output files are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
}

fn default_log_every() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Stop once `patience` consecutive logged losses fail to improve on the
/// best so far by a relative margin of `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStop {
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { patience: default_patience(), tolerance: default_tolerance() }
    }
}

fn default_patience() -> usize {
    10
}

fn default_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic(QuadraticSpec),
    Rosenbrock(RosenbrockSpec),
    LogisticRegression(LogisticSpec),
    DeepPlainMlp(MlpSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub dimension: usize,
    pub condition_number: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosenbrockSpec {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticSpec {
    pub n_features: usize,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub depth: usize,
    pub width: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_turns")]
    pub turns: f64,
}

fn default_samples() -> usize {
    crate::problems::mlp::DEFAULT_SAMPLES
}

fn default_turns() -> f64 {
    crate::problems::mlp::DEFAULT_TURNS
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn Problem>> {
        Ok(match self {
            ProblemSpec::Quadratic(s) => {
                Box::new(Quadratic::new(s.dimension, s.condition_number, s.seed)?.with_noise(s.noise)?)
            }
            ProblemSpec::Rosenbrock(s) => Box::new(Rosenbrock::new(s.n)?),
            ProblemSpec::LogisticRegression(s) => Box::new(LogisticRegression::new(s.n_features, s.n_samples, s.seed)?),
            ProblemSpec::DeepPlainMlp(s) => {
                Box::new(DeepPlainMlp::with_data(s.depth, s.width, s.seed, s.samples, s.turns)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Novak(OptimizerConfig),
    Baseline(BaselineConfig),
}

impl OptimizerSpec {
    pub fn label(&self) -> String {
        match self {
            OptimizerSpec::Novak(_) => "novak".into(),
            OptimizerSpec::Baseline(b) => b.kind.to_string(),
        }
    }

    /// Checks the hyperparameters without building anything.
    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerSpec::Novak(c) => c.clone().validated().map(|_| ()),
            OptimizerSpec::Baseline(b) => b.validate(),
        }
    }

    pub fn build(&self, model: &Model) -> Result<Box<dyn Optimizer + Send>> {
        Ok(match self {
            OptimizerSpec::Novak(c) => Box::new(Novak::new(c.clone(), model)?),
            OptimizerSpec::Baseline(b) => Box::new(Baseline::new(b.clone(), model)?),
        })
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| NovakError::Parse { path: origin.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| NovakError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    pub fn run_name(&self) -> Result<String> {
        let name = match &self.name {
            Some(n) => n.clone(),
            None => format!("{}_{}", self.problem.build()?.name(), self.optimizer.label()),
        };
        Ok(name)
    }

    /// Validates every field and builds the problem once, so that all
    /// configuration errors surface before any compute.
    pub fn validate(&self) -> Result<Box<dyn Problem>> {
        if self.steps == 0 {
            return Err(NovakError::config("steps must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(NovakError::config("log_every must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(NovakError::config("seeds must not be empty"));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name.contains("__seed") {
                return Err(NovakError::config(format!("unusable run name `{name}`")));
            }
        }
        if let Some(es) = &self.early_stop {
            if es.patience == 0 || !(es.tolerance >= 0.0 && es.tolerance.is_finite()) {
                return Err(NovakError::config(format!(
                    "early_stop needs patience >= 1 and a finite tolerance >= 0, got {} and {}",
                    es.patience, es.tolerance
                )));
            }
        }
        self.optimizer.validate()?;
        let problem = self.problem.build()?;
        if let Some(b) = self.batch_size {
            problem.check_batch(b)?;
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;
    use crate::novak::LookaheadMode;

    const EXAMPLE: &str = r#"
name = "quad"
steps = 100
log_every = 10
seeds = [1, 2]
output = "out"

[problem.quadratic]
dimension = 5
condition_number = 10.0

[optimizer.novak]
alpha = 0.01
lookahead_mode = "none"
"#;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn parses_a_novak_run() {
        let cfg = parse(EXAMPLE).unwrap();
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.batch_size, None);
        match &cfg.optimizer {
            OptimizerSpec::Novak(c) => {
                assert_eq!(c.alpha, 0.01);
                assert_eq!(c.lookahead_mode, LookaheadMode::None);
                assert_eq!(c.beta1, 0.9);
            }
            other => panic!("{other:?}"),
        }
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.run_name().unwrap(), "quad");
    }

    #[test]
    fn parses_a_baseline_run() {
        let text = r#"
steps = 10
[problem.rosenbrock]
n = 2
[optimizer.baseline]
kind = "sgd_momentum"
alpha = 0.001
"#;
        let cfg = parse(text).unwrap();
        match &cfg.optimizer {
            OptimizerSpec::Baseline(b) => assert_eq!(b.kind, BaselineKind::SgdMomentum),
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.run_name().unwrap(), "rosenbrock_n2_sgd_momentum");
        assert_eq!(cfg.log_every, 1);
    }

    #[test]
    fn unknown_keys_fail_loudly() {
        assert!(parse(&EXAMPLE.replace("log_every", "log_evry")).is_err());
        assert!(parse(&EXAMPLE.replace("alpha = 0.01", "alpah = 0.01")).is_err());
        assert!(parse(&EXAMPLE.replace("condition_number", "cond")).is_err());
        assert!(parse(&EXAMPLE.replace("[problem.quadratic]", "[problem.sphere]")).is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let bad = |from: &str, to: &str| parse(&EXAMPLE.replace(from, to)).unwrap().validate().is_err();
        assert!(bad("steps = 100", "steps = 0"));
        assert!(bad("log_every = 10", "log_every = 0"));
        assert!(bad("seeds = [1, 2]", "seeds = []"));
        assert!(bad("alpha = 0.01", "alpha = -0.01"));
        assert!(bad("condition_number = 10.0", "condition_number = 0.5"));
        assert!(bad("name = \"quad\"", "name = \"a__seed1\""));
    }

    #[test]
    fn batch_size_is_checked_against_the_problem() {
        let text = r#"
steps = 10
batch_size = 400
[problem.logistic_regression]
n_features = 5
n_samples = 500
[optimizer.baseline]
kind = "adam"
"#;
        assert!(parse(text).unwrap().validate().is_err());
        assert!(parse(&text.replace("400", "64")).unwrap().validate().is_ok());
    }
}
