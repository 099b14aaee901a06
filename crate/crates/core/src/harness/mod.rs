//! Experiment runner: builds a problem and an optimizer from a
//! [`RunConfig`], runs every seed (in parallel, each with its own state),
//! logs [`TrajectoryRecord`]s and writes one CSV per seed.

mod config;
mod record;
mod summary;

pub use config::{
    EarlyStop, LogisticSpec, MlpSpec, OptimizerSpec, ProblemSpec, QuadraticSpec, RosenbrockSpec, RunConfig,
};
pub use record::{read_csv, write_csv, TrajectoryRecord, CSV_HEADER};
pub use summary::{format_summary, summarize, RunTrace, SummaryRow};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{NovakError, Result};
use crate::param::{GradientSet, Model};
use crate::problems::Problem;

/// Why a run stopped before its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub records: Vec<TrajectoryRecord>,
    pub failure: Option<RunFailure>,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn failures(&self) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(|r| r.failure.is_some())
    }

    /// Writes `<dir>/<name>__seed<N>.csv` for every run.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| NovakError::Io { path: dir.to_path_buf(), source })?;
        self.runs
            .iter()
            .map(|run| {
                let path = dir.join(format!("{}__seed{}.csv", self.name, run.seed));
                write_csv(&run.records, &path)?;
                Ok(path)
            })
            .collect()
    }
}

/// Runs every seed of `config`. Configuration problems are returned as
/// errors before any step is taken; numeric breakdowns inside a run are
/// recorded in that run's [`RunResult::failure`].
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    let problem = config.validate()?;
    let name = config.run_name()?;
    let runs =
        config.seeds.par_iter().map(|&seed| run_seed(config, problem.as_ref(), seed)).collect::<Result<Vec<_>>>()?;
    for run in &runs {
        if let Some(f) = &run.failure {
            log::warn!("{name} seed {}: failed at step {}: {}", run.seed, f.step, f.message);
        }
    }
    Ok(ExperimentResult { name, runs })
}

fn gradient_at(problem: &dyn Problem, theta: &[f64], batch: Option<usize>, batch_seed: u64) -> Vec<f64> {
    batch.and_then(|b| problem.stochastic_gradient(theta, batch_seed, b)).unwrap_or_else(|| problem.gradient(theta))
}

/// One seed of an experiment.
pub fn run_seed(config: &RunConfig, problem: &dyn Problem, seed: u64) -> Result<RunResult> {
    let mut model = problem.model(&problem.initial_point(seed));
    let mut optimizer = config.optimizer.build(&model)?;
    let mut batch_seeds = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut records = Vec::new();
    let mut failure = None;
    let mut stopped_early = false;
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for step in 1..=config.steps {
        let batch_seed = batch_seeds.next_u64();
        let theta = model.flatten();
        let grads = GradientSet::from_flat(&model, &gradient_at(problem, &theta, config.batch_size, batch_seed))?;
        let mut closure = |m: &Model| {
            let g = gradient_at(problem, &m.flatten(), config.batch_size, batch_seed);
            GradientSet::from_flat(m, &g).expect("problem gradients match its layout")
        };
        let report = match optimizer.step_with_closure(&mut model, &grads, &mut closure) {
            Ok(r) => r,
            Err(e @ NovakError::Numeric(_)) => {
                records.push(failed_record(step, optimizer.census(&model).persistent_vectors()));
                failure = Some(RunFailure { step, message: e.to_string() });
                break;
            }
            Err(e) => return Err(e),
        };
        if step % config.log_every != 0 && step != config.steps {
            continue;
        }
        let theta = model.flatten();
        let loss = problem.loss(&theta);
        records.push(TrajectoryRecord {
            step,
            loss,
            grad_norm: report.grad_norm,
            effective_lr: report.effective_lr,
            update_norm: report.update_norm(),
            accuracy: problem.accuracy(&theta),
            persistent_vector_count: optimizer.census(&model).persistent_vectors(),
            wall_time_ms: if config.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
        });
        if !loss.is_finite() {
            failure = Some(RunFailure { step, message: format!("loss became {loss}") });
            break;
        }
        if let Some(es) = &config.early_stop {
            if loss < best - es.tolerance * best.abs() || best.is_infinite() {
                best = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= es.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(RunResult { seed, records, failure, stopped_early })
}

fn failed_record(step: usize, persistent: usize) -> TrajectoryRecord {
    TrajectoryRecord {
        step,
        loss: f64::NAN,
        grad_norm: f64::NAN,
        effective_lr: f64::NAN,
        update_norm: f64::NAN,
        accuracy: None,
        persistent_vector_count: persistent,
        wall_time_ms: 0.0,
    }
}

#[cfg(test)]
mod tests;
