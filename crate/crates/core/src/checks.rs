//! Executable acceptance checks.
//!
//! Each check runs a fixed, seeded experiment and reports whether the
//! property held together with the measured numbers. The acceptance test
//! target and the `check` subcommand of the command-line tool both run
//! [`run_all`].

use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::baselines::{Baseline, BaselineConfig, BaselineKind};
use crate::harness::{run_experiment, OptimizerSpec, ProblemSpec, QuadraticSpec, RunConfig};
use crate::lookahead::{state_memory_census, LookaheadState};
use crate::novak::{ops, LookaheadMode, NesterovMode, Novak, OptimizerConfig};
use crate::optim::{Optimizer, StepReport};
use crate::oracles::{self, ReferenceAdam};
use crate::param::{GradientSet, Model};
use crate::problems::{
    finite_difference_gradient, max_relative_error, DeepPlainMlp, LogisticRegression, Problem, Quadratic, Rosenbrock,
};

/// Result of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type CheckFn = fn() -> (bool, String);

/// Every check as `(id, name, function)`.
pub const CHECKS: [(u8, &str, CheckFn); 12] = [
    (1, "reduction to Adam and RAdam", reduction_oracles),
    (2, "moments stay bounded", moment_bounds),
    (3, "rectification branches", rectification_branches),
    (4, "zero-gradient decay", zero_gradient_decay),
    (5, "lookahead equivalence", lookahead_equivalence),
    (6, "lookahead variance reduction", lookahead_variance),
    (7, "Nesterov approximation bound", nesterov_bound),
    (8, "gradient correctness", gradient_correctness),
    (9, "convergence regression", convergence_regression),
    (10, "deep plain MLP robustness", deep_mlp_robustness),
    (11, "memory census", memory_census),
    (12, "deterministic CSV output", deterministic_output),
];

/// Runs the check with the given id.
pub fn run(id: u8) -> Option<CheckOutcome> {
    CHECKS.iter().find(|c| c.0 == id).map(|&(id, name, f)| timed(id, name, f))
}

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS.iter().map(|&(id, name, f)| timed(id, name, f)).collect()
}

fn timed(id: u8, name: &'static str, f: CheckFn) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f();
    CheckOutcome { id, name, passed, detail, elapsed: start.elapsed() }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

fn step_flat(opt: &mut dyn Optimizer, model: &mut Model, g: &[f64]) -> crate::error::Result<StepReport> {
    let grads = GradientSet::from_flat(model, g)?;
    opt.step(model, &grads)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Replays `cfg` on the gradient field of `problem` and returns θ after
/// every step.
fn novak_trajectory(cfg: OptimizerConfig, problem: &dyn Problem, theta0: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let mut model = problem.model(theta0);
    let mut opt = Novak::new(cfg, &model).expect("valid configuration");
    (0..steps)
        .map(|_| {
            let g = problem.gradient(&model.flatten());
            step_flat(&mut opt, &mut model, &g).expect("finite step");
            model.flatten()
        })
        .collect()
}

fn reduction_oracles() -> (bool, String) {
    const TOL: f64 = 1e-12;
    let start = Instant::now();
    let reference = ReferenceAdam { alpha: 1e-2, ..ReferenceAdam::default() };
    let ReferenceAdam { alpha, beta1, beta2, epsilon } = reference;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_adam, mut worst_radam) = (0.0f64, 0.0f64);
    for i in 0..10 {
        let cond = 10f64.powf(rng.random_range(0.0..3.0));
        let problem = Quadratic::new(20, cond, 1000 + i).expect("valid quadratic");
        let theta0 = normal_vec(&mut rng, 20);
        let runs = [
            (OptimizerConfig::adam_reduction(alpha, beta1, beta2, epsilon), false),
            (OptimizerConfig::radam_reduction(alpha, beta1, beta2, epsilon), true),
        ];
        for (cfg, rectified) in runs {
            let ours = novak_trajectory(cfg, &problem, &theta0, 1000);
            let grad = |x: &[f64]| problem.gradient(x);
            let oracle = if rectified {
                oracles::reference_radam_trajectory(grad, &theta0, 1000, reference)
            } else {
                oracles::reference_adam_trajectory(grad, &theta0, 1000, reference)
            };
            let worst = ours.iter().zip(&oracle.snapshots).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max);
            let slot = if rectified { &mut worst_radam } else { &mut worst_adam };
            *slot = slot.max(worst);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst_adam <= TOL && worst_radam <= TOL && secs < 5.0,
        format!("max |Δθ| Adam {worst_adam:.2e}, RAdam {worst_radam:.2e} (tol {TOL:.0e}); {secs:.2} s of 5 s"),
    )
}

fn moment_bounds() -> (bool, String) {
    const STEPS: usize = 100_000;
    const DIM: usize = 8;
    let start = Instant::now();
    let mut violations = 0usize;
    let mut closest = f64::INFINITY;
    for (i, bound) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        let cfg = OptimizerConfig {
            nesterov_mode: NesterovMode::None,
            lookahead_mode: LookaheadMode::None,
            clip_threshold: None,
            ..OptimizerConfig::default()
        };
        let mut model = Model::from_flat(normal_vec(&mut rng, DIM));
        let mut opt = Novak::new(cfg, &model).expect("valid configuration");
        let g2 = bound * bound;
        for _ in 0..STEPS {
            // Mix saturated streams (every entry at ±G) with clipped noise.
            let g: Vec<f64> = if rng.random_bool(0.3) {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                vec![sign * bound; DIM]
            } else {
                (0..DIM).map(|_| (3.0 * bound * gauss(&mut rng)).clamp(-bound, bound)).collect()
            };
            step_flat(&mut opt, &mut model, &g).expect("finite step");
            let m = opt.moments();
            let m_max = m.m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            let v_max = m.v.iter().flatten().fold(0.0f64, |a, &x| a.max(x));
            let v_min = m.v.iter().flatten().fold(f64::INFINITY, |a, &x| a.min(x));
            if m_max > bound || v_max > g2 || v_min < 0.0 {
                violations += 1;
            }
            closest = closest.min(bound - m_max).min((g2 - v_max) / g2 * bound);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        violations == 0 && secs < 10.0,
        format!("{violations} violating steps of 3×{STEPS}; smallest margin {closest:.1e}; {secs:.2} s of 10 s"),
    )
}

fn rectification_branches() -> (bool, String) {
    const TOL: f64 = 1e-12;
    let (alpha, beta1) = (1e-3, 0.9);
    let mut branch_mismatches = 0usize;
    let mut out_of_range = 0usize;
    let mut worst = 0.0f64;
    let mut r_drift = 0.0f64;
    let mut counts = [0usize; 2];
    for beta2 in [0.99, 0.999, 0.9999] {
        let cfg = OptimizerConfig {
            alpha,
            beta1,
            beta2,
            nesterov_mode: NesterovMode::None,
            lookahead_mode: LookaheadMode::None,
            clip_threshold: None,
            ..OptimizerConfig::default()
        };
        let mut model = Model::from_flat(vec![0.5]);
        let mut opt = Novak::new(cfg, &model).expect("valid configuration");
        let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
        for t in 1..=100_000u64 {
            let report = opt.step(&mut model, &GradientSet::new(vec![vec![1.0]])).expect("finite step");
            let tf = t as f64;
            let b2t = beta2.powf(tf);
            let rho = rho_inf - 2.0 * tf * b2t / (1.0 - b2t);
            let expect_rectified = rho >= 5.0;
            let plain = alpha / (1.0 - beta1.powf(tf));
            if report.r_t.is_some() != expect_rectified {
                branch_mismatches += 1;
                continue;
            }
            counts[expect_rectified as usize] += 1;
            let expected = match report.r_t {
                None => plain,
                Some(r) => {
                    if !(r > 0.0 && r <= 1.0) {
                        out_of_range += 1;
                    }
                    // The closed form loses digits to cancellation in
                    // 1 − β₂ᵗ, so this comparison is reported, not asserted.
                    let r_ref = ((rho - 4.0) * (rho - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho))
                        .sqrt()
                        .min(1.0);
                    r_drift = r_drift.max((r - r_ref).abs());
                    plain * r
                }
            };
            worst = worst.max((report.effective_lr - expected).abs() / expected);
        }
    }
    (
        branch_mismatches == 0 && out_of_range == 0 && worst <= TOL,
        format!(
            "{} unrectified / {} rectified steps, {branch_mismatches} branch mismatches, \
             {out_of_range} r_t outside (0,1], max relative step-size error {worst:.2e} (tol {TOL:.0e}); \
             r_t vs direct closed form {r_drift:.1e}",
            counts[0], counts[1]
        ),
    )
}

fn zero_gradient_decay() -> (bool, String) {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let theta0 = normal_vec(&mut rng, 12);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for alpha in [1e-3, 1e-1] {
        for lambda in [0.0, 0.01, 0.1] {
            for rectified in [true, false] {
                let cfg = OptimizerConfig {
                    alpha,
                    weight_decay: lambda,
                    rectified,
                    lookahead_mode: LookaheadMode::None,
                    ..OptimizerConfig::default()
                };
                let mut model = Model::from_flat(theta0.clone());
                let mut opt = Novak::new(cfg, &model).expect("valid configuration");
                let zero = GradientSet::zeros_like(&model);
                for t in 1..=100u32 {
                    opt.step(&mut model, &zero).expect("finite step");
                    let expected = oracles::closed_form_decay(&theta0, alpha, lambda, t);
                    worst = worst.max(max_abs_diff(&model.flatten(), &expected));
                }
                cases += 1;
            }
        }
    }
    (worst <= TOL, format!("{cases} configurations × 100 steps, max |Δθ| {worst:.2e} (tol {TOL:.0e})"))
}

fn lookahead_equivalence() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut worst = 0.0f64;
    let mut worst_k1 = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=20usize);
        let dim = rng.random_range(1..=16usize);
        let alpha_la = rng.random_range(0.05..0.95);
        let theta0 = normal_vec(&mut rng, dim);
        let mut fast = theta0.clone();
        let iterates: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                fast.iter_mut().for_each(|x| *x += 0.1 * gauss(&mut rng));
                fast.clone()
            })
            .collect();
        let mut model = Model::from_flat(theta0.clone());
        let mut state = LookaheadState::new(LookaheadMode::MemoryEfficient, &model);
        for it in &iterates {
            model.assign_flat(it).expect("same length");
            state.accumulate(&model, k).expect("window not full");
        }
        state.sync(&mut model, alpha_la, k).expect("full window");
        let expected = oracles::storing_lookahead_oracle(&theta0, &iterates, alpha_la);
        worst = worst.max(max_abs_diff(&model.flatten(), &expected));

        let after = |mode: LookaheadMode| {
            let mut model = Model::from_flat(theta0.clone());
            let mut state = LookaheadState::new(mode, &model);
            model.assign_flat(&iterates[0]).expect("same length");
            assert!(state.after_inner_step(&mut model, alpha_la, 1).expect("k = 1 window"));
            model.flatten()
        };
        worst_k1 = worst_k1.max(max_abs_diff(&after(LookaheadMode::MemoryEfficient), &after(LookaheadMode::Basic)));
    }
    (
        worst <= 1e-12 && worst_k1 <= 1e-15,
        format!("100 windows: max |Δ| vs storing oracle {worst:.2e} (tol 1e-12); k=1 memory-efficient vs basic {worst_k1:.2e} (tol 1e-15)"),
    )
}

/// Distance from the optimum after `steps` noisy steps, one value per seed.
fn final_distances(problem: &Quadratic, cfg: &OptimizerConfig, seeds: std::ops::Range<u64>, steps: usize) -> Vec<f64> {
    seeds
        .map(|seed| {
            let mut model = problem.model(&problem.initial_point(0));
            let mut opt = Novak::new(cfg.clone(), &model).expect("valid configuration");
            let mut stream = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..steps {
                let g = problem.stochastic_gradient(&model.flatten(), stream.random(), 1).expect("noisy quadratic");
                step_flat(&mut opt, &mut model, &g).expect("finite step");
            }
            // Step counts are multiples of k, so with lookahead the model
            // sits on the slow weights here.
            l2(&model.flatten())
        })
        .collect()
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub const VARIANCE_ALPHA: f64 = 0.01;
pub const VARIANCE_NOISE: f64 = 1.0;

fn lookahead_variance() -> (bool, String) {
    const STEPS: usize = 500;
    let start = Instant::now();
    let problem = Quadratic::new(10, 10.0, 600).and_then(|q| q.with_noise(VARIANCE_NOISE)).expect("valid quadratic");
    let base = OptimizerConfig { alpha: VARIANCE_ALPHA, ..OptimizerConfig::default() };
    let with = OptimizerConfig {
        lookahead_mode: LookaheadMode::MemoryEfficient,
        lookahead_k: 5,
        lookahead_alpha: 0.5,
        ..base.clone()
    };
    let without = OptimizerConfig { lookahead_mode: LookaheadMode::None, ..base };
    let mut wins = 0;
    let mut parts = Vec::new();
    for trial in 0..3u64 {
        let seeds = trial * 50..trial * 50 + 50;
        let a = sample_variance(&final_distances(&problem, &with, seeds.clone(), STEPS));
        let b = sample_variance(&final_distances(&problem, &without, seeds, STEPS));
        if a < b {
            wins += 1;
        }
        parts.push(format!("{a:.3e} vs {b:.3e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    (
        wins >= 2 && secs < 60.0,
        format!("variance with/without lookahead: {}; lower in {wins}/3; {secs:.2} s of 60 s", parts.join(", ")),
    )
}

fn nesterov_bound() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let cfg = OptimizerConfig { nesterov_mode: NesterovMode::Approximation, ..OptimizerConfig::default() };
    let beta_n = cfg.nesterov_coeff;
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut checked = 0usize;
    for i in 0..20 {
        let cond = 10f64.powf(rng.random_range(0.0..2.0));
        let problem = Quadratic::new(5, cond, 7000 + i).expect("valid quadratic");
        let lipschitz = problem.lipschitz_hint().expect("quadratics know their curvature");
        let mut model = problem.model(&normal_vec(&mut rng, 5));
        let mut opt = Novak::new(cfg.clone(), &model).expect("valid configuration");
        for step in 1..=200 {
            let theta = model.flatten();
            let g = problem.gradient(&theta);
            let m_prev: Vec<f64> = opt.moments().m.concat();
            let approx = ops::nesterov_approximation(&g, &m_prev, beta_n);
            let ahead: Vec<f64> = theta.iter().zip(&m_prev).map(|(x, m)| x + beta_n * m).collect();
            let truth = problem.gradient(&ahead);
            let lhs = l2(&approx.iter().zip(&truth).map(|(a, b)| a - b).collect::<Vec<_>>());
            let rhs = 2.0 * beta_n * lipschitz * l2(&m_prev);
            checked += 1;
            if lhs > rhs {
                violations.push(step);
            } else if rhs > 0.0 {
                worst_ratio = worst_ratio.max(lhs / rhs);
            }
            step_flat(&mut opt, &mut model, &g).expect("finite step");
        }
    }
    let mut by_step = std::collections::BTreeMap::<usize, usize>::new();
    for s in &violations {
        *by_step.entry(*s).or_default() += 1;
    }
    let summary: Vec<String> = by_step.iter().take(6).map(|(s, n)| format!("step {s}: {n}")).collect();
    (
        violations.is_empty(),
        format!(
            "{} of {checked} steps violate the bound [{}]; worst lhs/rhs among the rest {worst_ratio:.3}",
            violations.len(),
            summary.join(", ")
        ),
    )
}

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-5;
/// Components where both gradients are below this are skipped (0/0).
pub const FD_FLOOR: f64 = 1e-10;

fn gradient_correctness() -> (bool, String) {
    let problems: Vec<(Box<dyn Problem>, f64)> = vec![
        (Box::new(Quadratic::new(50, 100.0, 800).expect("valid")), 1.0),
        (Box::new(Rosenbrock::new(2).expect("valid")), 1.0),
        (Box::new(Rosenbrock::new(10).expect("valid")), 1.0),
        (Box::new(LogisticRegression::new(20, 500, 800).expect("valid")), 1.0),
        (Box::new(DeepPlainMlp::new(8, 16, 800).expect("valid")), 0.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut all = true;
    let mut parts = Vec::new();
    for (problem, spread) in &problems {
        let mut worst = 0.0f64;
        let mut failing = 0;
        for point in 0..20u64 {
            // MLP points are fresh initializations; the others are random
            // perturbations of the starting point.
            let theta: Vec<f64> = if *spread == 0.0 {
                problem.initial_point(point)
            } else {
                problem.initial_point(point).iter().map(|x| x + spread * gauss(&mut rng)).collect()
            };
            let err = max_relative_error(
                &problem.gradient(&theta),
                &finite_difference_gradient(problem.as_ref(), &theta, FD_STEP),
                FD_FLOOR,
            );
            worst = worst.max(err);
            if !(err < FD_TOL) {
                failing += 1;
            }
        }
        all &= failing == 0;
        parts.push(format!(
            "{} {worst:.1e}{}",
            problem.name(),
            if failing > 0 { format!(" ({failing}/20 over)") } else { String::new() }
        ));
    }
    (all, format!("max componentwise relative error (tol {FD_TOL:.0e}): {}", parts.join(", ")))
}

/// First step at which `done` holds, checking every `every` steps.
fn steps_until(
    problem: &dyn Problem,
    cfg: OptimizerConfig,
    budget: usize,
    every: usize,
    batch: Option<usize>,
    done: impl Fn(&[f64]) -> bool,
) -> Option<usize> {
    let mut model = problem.model(&problem.initial_point(0));
    let mut opt = Novak::new(cfg, &model).expect("valid configuration");
    let mut stream = ChaCha8Rng::seed_from_u64(900);
    for step in 1..=budget {
        let theta = model.flatten();
        let g = batch
            .and_then(|b| problem.stochastic_gradient(&theta, stream.random(), b))
            .unwrap_or_else(|| problem.gradient(&theta));
        step_flat(&mut opt, &mut model, &g).expect("finite step");
        if step % every == 0 && done(&model.flatten()) {
            return Some(step);
        }
    }
    None
}

fn convergence_regression() -> (bool, String) {
    let start = Instant::now();
    let quad = Quadratic::new(50, 100.0, 900).expect("valid quadratic");
    let rosen = Rosenbrock::new(2).expect("valid");
    let logistic = LogisticRegression::new(20, 1000, 900).expect("valid");
    let defaults = OptimizerConfig::default;
    let a = steps_until(&quad, defaults(), 5000, 1, None, |x| quad.loss(x) < 1e-6);
    let b = steps_until(&rosen, defaults(), 20_000, 1, None, |x| rosen.loss(x) < 1e-3);
    let c =
        steps_until(&logistic, defaults(), 2000, 10, Some(32), |x| logistic.accuracy(x).is_some_and(|acc| acc >= 0.9));
    let secs = start.elapsed().as_secs_f64();
    let show = |s: Option<usize>| s.map_or("never".to_string(), |s| format!("step {s}"));
    (
        a.is_some() && b.is_some() && c.is_some() && secs < 120.0,
        format!(
            "quadratic < 1e-6: {}; Rosenbrock < 1e-3: {}; logistic accuracy ≥ 0.9: {}; {secs:.1} s of 120 s",
            show(a),
            show(b),
            show(c)
        ),
    )
}

pub const MLP_DEPTH: usize = 12;
pub const MLP_WIDTH: usize = 16;
pub const MLP_BATCH: usize = 64;
pub const MLP_SGD_ALPHA: f64 = 0.01;

/// Trains the depth-12 MLP; returns (best logged accuracy, first step at
/// ≥ 0.8, whether every loss and second moment stayed finite).
fn train_mlp(seed: u64, optimizer: &mut dyn Optimizer, problem: &DeepPlainMlp) -> (f64, Option<usize>, bool) {
    let mut model = problem.model(&problem.initial_point(seed));
    let mut stream = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut best = 0.0f64;
    let mut first = None;
    for step in 1..=5000 {
        let g =
            problem.stochastic_gradient(&model.flatten(), stream.random(), MLP_BATCH).expect("mini-batches supported");
        if step_flat(optimizer, &mut model, &g).is_err() {
            return (best, first, false);
        }
        let v_finite = optimizer.second_moments().is_none_or(|v| v.iter().flatten().all(|x| x.is_finite()));
        if !v_finite || !model.is_finite() {
            return (best, first, false);
        }
        if step % 100 == 0 {
            let theta = model.flatten();
            if !problem.loss(&theta).is_finite() {
                return (best, first, false);
            }
            let acc = problem.accuracy(&theta).expect("classification problem");
            best = best.max(acc);
            if acc >= 0.8 && first.is_none() {
                first = Some(step);
            }
        }
    }
    (best, first, true)
}

fn deep_mlp_robustness() -> (bool, String) {
    use rayon::prelude::*;
    let jobs: Vec<(u64, bool)> = (0..3).flat_map(|s| [(s, true), (s, false)]).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(seed, novak)| {
            let problem = DeepPlainMlp::new(MLP_DEPTH, MLP_WIDTH, seed).expect("valid MLP");
            let model = problem.model(&problem.initial_point(seed));
            let mut optimizer: Box<dyn Optimizer> = if novak {
                Box::new(Novak::new(OptimizerConfig::default(), &model).expect("valid configuration"))
            } else {
                let cfg = BaselineConfig::new(BaselineKind::SgdMomentum).with_alpha(MLP_SGD_ALPHA);
                Box::new(Baseline::new(cfg, &model).expect("valid configuration"))
            };
            (seed, novak, train_mlp(seed, optimizer.as_mut(), &problem))
        })
        .collect();
    let ok = results.iter().all(|(_, _, (_, first, finite))| first.is_some() && *finite);
    let parts: Vec<String> = results
        .iter()
        .map(|(seed, novak, (best, first, finite))| {
            format!(
                "{} seed {seed}: best {best:.3}, ≥0.8 at {}{}",
                if *novak { "novak" } else { "sgd" },
                first.map_or("never".into(), |s| s.to_string()),
                if *finite { "" } else { ", NON-FINITE" }
            )
        })
        .collect();
    (ok, parts.join("; "))
}

fn memory_census() -> (bool, String) {
    let model = Model::from_flat(vec![0.3; 16]);
    let census = |mode: LookaheadMode, full: bool, steps: usize| {
        let cfg = OptimizerConfig { lookahead_mode: mode, full_features_mode: full, ..OptimizerConfig::default() };
        let mut model = model.clone();
        let mut opt = Novak::new(cfg, &model).expect("valid configuration");
        let g = GradientSet::new(vec![vec![0.1; 16]]);
        for _ in 0..steps {
            opt.step(&mut model, &g).expect("finite step");
        }
        let c = state_memory_census(opt.lookahead(), model.num_params());
        (c.persistent_vectors(), c.transient_vectors())
    };
    let none = census(LookaheadMode::None, false, 2);
    let basic = census(LookaheadMode::Basic, true, 2);
    let efficient = census(LookaheadMode::MemoryEfficient, false, 2);
    (
        none.0 == 3 && basic.0 == 4 && efficient == (3, 2),
        format!(
            "persistent/transient: none {}/{}, basic {}/{}, memory_efficient mid-window {}/{}",
            none.0, none.1, basic.0, basic.1, efficient.0, efficient.1
        ),
    )
}

fn deterministic_output() -> (bool, String) {
    let config = RunConfig {
        name: Some("determinism".into()),
        problem: ProblemSpec::Quadratic(QuadraticSpec { dimension: 10, condition_number: 10.0, noise: 0.5, seed: 12 }),
        optimizer: OptimizerSpec::Novak(OptimizerConfig { alpha: 0.01, ..OptimizerConfig::default() }),
        steps: 500,
        batch_size: Some(4),
        log_every: 5,
        seeds: vec![3],
        output: PathBuf::new(),
        early_stop: None,
        timing: false,
    };
    let base = std::env::temp_dir().join(format!(
        "novak-determinism-{}-{}",
        std::process::id(),
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos())
    ));
    let outcome = (|| -> crate::error::Result<(bool, usize)> {
        let mut files = Vec::new();
        for dir in ["a", "b"] {
            let paths = run_experiment(&config)?.write(&base.join(dir))?;
            let bytes = std::fs::read(&paths[0])
                .map_err(|source| crate::error::NovakError::Io { path: paths[0].clone(), source })?;
            files.push(bytes);
        }
        Ok((files[0] == files[1], files[0].len()))
    })();
    let _ = std::fs::remove_dir_all(&base);
    match outcome {
        Ok((same, len)) => {
            (same, format!("two runs wrote {} ({len} bytes)", if same { "identical files" } else { "different files" }))
        }
        Err(e) => (false, format!("run failed: {e}")),
    }
}
