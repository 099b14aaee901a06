use super::*;
use crate::baselines::{BaselineConfig, BaselineKind};
use crate::novak::{LookaheadMode, OptimizerConfig};

fn quadratic(dimension: usize, noise: f64) -> ProblemSpec {
    ProblemSpec::Quadratic(QuadraticSpec { dimension, condition_number: 10.0, noise, seed: 3 })
}

fn config(problem: ProblemSpec, optimizer: OptimizerSpec, steps: usize) -> RunConfig {
    RunConfig {
        name: Some("t".into()),
        problem,
        optimizer,
        steps,
        batch_size: None,
        log_every: 1,
        seeds: vec![0, 1],
        output: PathBuf::from("unused"),
        early_stop: None,
        timing: false,
    }
}

fn sgd(alpha: f64) -> OptimizerSpec {
    OptimizerSpec::Baseline(BaselineConfig {
        momentum: 0.0,
        ..BaselineConfig::new(BaselineKind::SgdMomentum).with_alpha(alpha)
    })
}

#[test]
fn gradient_descent_on_a_quadratic_is_monotone() {
    // L_max = 10, so α = 0.15 < 2/L contracts every coordinate
    let result = run_experiment(&config(quadratic(8, 0.0), sgd(0.15), 200)).unwrap();
    for run in &result.runs {
        assert_eq!(run.records.len(), 200);
        assert!(run.records.windows(2).all(|w| w[1].loss <= w[0].loss));
        assert!(run.failure.is_none());
    }
}

#[test]
fn logs_every_k_steps_plus_the_last() {
    let mut cfg = config(quadratic(3, 0.0), sgd(0.01), 25);
    cfg.log_every = 10;
    let run = &run_experiment(&cfg).unwrap().runs[0];
    assert_eq!(run.records.iter().map(|r| r.step).collect::<Vec<_>>(), vec![10, 20, 25]);
}

#[test]
fn reduction_config_matches_adam_end_to_end() {
    let novak = OptimizerSpec::Novak(OptimizerConfig::adam_reduction(1e-2, 0.9, 0.999, 1e-8));
    let adam = OptimizerSpec::Baseline(BaselineConfig::new(BaselineKind::Adam).with_alpha(1e-2));
    let a = run_experiment(&config(quadratic(10, 0.0), novak, 500)).unwrap();
    let b = run_experiment(&config(quadratic(10, 0.0), adam, 500)).unwrap();
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        for (x, y) in ra.records.iter().zip(&rb.records) {
            assert!((x.loss - y.loss).abs() <= 1e-10, "step {}: {} vs {}", x.step, x.loss, y.loss);
        }
    }
}

#[test]
fn same_seed_gives_identical_csv_bytes() {
    let mut cfg = config(quadratic(6, 0.3), OptimizerSpec::Novak(OptimizerConfig::default()), 300);
    cfg.batch_size = Some(4);
    cfg.log_every = 7;
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let p1 = run_experiment(&cfg).unwrap().write(d1.path()).unwrap();
    let p2 = run_experiment(&cfg).unwrap().write(d2.path()).unwrap();
    assert_eq!(p1.len(), 2);
    for (a, b) in p1.iter().zip(&p2) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
    assert!(p1[0].file_name().unwrap().to_str().unwrap() == "t__seed0.csv");
}

#[test]
fn seeds_change_the_noisy_trajectory() {
    let mut cfg = config(quadratic(6, 0.3), OptimizerSpec::Novak(OptimizerConfig::default()), 50);
    cfg.batch_size = Some(1);
    let r = run_experiment(&cfg).unwrap();
    assert_ne!(r.runs[0].records, r.runs[1].records);
}

#[test]
fn divergence_is_a_recorded_failure() {
    // far past 2/L: plain gradient descent blows up to inf, then NaN
    let result = run_experiment(&config(quadratic(4, 0.0), sgd(5.0), 2000)).unwrap();
    let run = &result.runs[0];
    let failure = run.failure.as_ref().expect("run should fail");
    assert!(failure.step < 2000);
    assert_eq!(run.records.last().unwrap().step, failure.step);
    assert!(!run.records.last().unwrap().loss.is_finite());
    assert_eq!(result.failures().count(), 2);
}

#[test]
fn early_stop_fires_on_a_plateau() {
    let mut cfg = config(quadratic(3, 0.0), sgd(0.15), 10_000);
    cfg.early_stop = Some(EarlyStop::default());
    let run = &run_experiment(&cfg).unwrap().runs[0];
    assert!(run.stopped_early);
    assert!(run.records.len() < 10_000);
}

#[test]
fn classification_runs_log_accuracy() {
    let cfg = RunConfig {
        batch_size: Some(16),
        log_every: 50,
        ..config(
            ProblemSpec::LogisticRegression(LogisticSpec { n_features: 5, n_samples: 200, seed: 1 }),
            OptimizerSpec::Novak(OptimizerConfig { alpha: 0.05, ..Default::default() }),
            200,
        )
    };
    let run = &run_experiment(&cfg).unwrap().runs[0];
    assert!(run.records.iter().all(|r| r.accuracy.is_some()));
    assert!(run.records.last().unwrap().accuracy.unwrap() > 0.8);
}

#[test]
fn census_counts_follow_lookahead_mode() {
    let peak = |mode: LookaheadMode, full: bool| {
        let cfg = OptimizerConfig { lookahead_mode: mode, full_features_mode: full, ..Default::default() };
        let r = run_experiment(&config(quadratic(3, 0.0), OptimizerSpec::Novak(cfg), 20)).unwrap();
        r.runs[0].records.iter().map(|x| x.persistent_vector_count).max().unwrap()
    };
    let none = peak(LookaheadMode::None, false);
    let efficient = peak(LookaheadMode::MemoryEfficient, false);
    let basic = peak(LookaheadMode::Basic, true);
    assert!(none <= efficient);
    assert_eq!(basic, none + 1);
}

#[test]
fn true_nesterov_runs_through_the_closure() {
    let cfg = OptimizerConfig {
        nesterov_mode: crate::novak::NesterovMode::True,
        full_features_mode: true,
        ..Default::default()
    };
    let r = run_experiment(&config(quadratic(3, 0.0), OptimizerSpec::Novak(cfg), 20)).unwrap();
    assert!(r.runs.iter().all(|x| x.failure.is_none()));
}

#[test]
fn bad_config_fails_before_running() {
    let mut cfg = config(quadratic(3, 0.0), sgd(0.1), 10);
    cfg.seeds.clear();
    assert!(matches!(run_experiment(&cfg), Err(NovakError::Config(_))));
}

#[test]
fn written_files_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let paths = run_experiment(&config(quadratic(4, 0.0), sgd(0.15), 100)).unwrap().write(dir.path()).unwrap();
    let traces: Vec<RunTrace> = paths.iter().map(|p| RunTrace::load(p).unwrap()).collect();
    assert_eq!(traces[1].seed, Some(1));
    let rows = summarize(&traces, 1e-3, None);
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].group.as_str(), rows[0].runs, rows[0].failures), ("t", 2, 0));
    assert!(rows[0].steps_to_threshold <= 100);
}
