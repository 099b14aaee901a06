use super::*;
use crate::param::{ParameterGroup, RoleTag};

fn quiet() -> OptimizerConfig {
    OptimizerConfig {
        lookahead_mode: LookaheadMode::None,
        nesterov_mode: NesterovMode::None,
        clip_threshold: None,
        ..Default::default()
    }
}

#[test]
fn zero_gradient_step_only_decays() {
    let cfg = OptimizerConfig { alpha: 0.1, weight_decay: 0.01, ..Default::default() };
    let mut model = Model::from_flat(vec![1.0]);
    let mut opt = Novak::new(cfg, &model).unwrap();
    let zero = GradientSet::zeros_like(&model);
    let report = opt.step(&mut model, &zero).unwrap();
    assert!((model.flatten()[0] - 0.999).abs() < 1e-15);
    assert_eq!(report.t, 1);
}

#[test]
fn zero_gradient_trajectory_is_geometric_decay() {
    for rectified in [true, false] {
        let cfg = OptimizerConfig { alpha: 0.1, weight_decay: 0.1, rectified, ..quiet() };
        let theta0 = vec![1.5, -0.25, 3.0];
        let mut model = Model::from_flat(theta0.clone());
        let mut opt = Novak::new(cfg, &model).unwrap();
        let zero = GradientSet::zeros_like(&model);
        for t in 1..=100 {
            opt.step(&mut model, &zero).unwrap();
            let f = (1.0f64 - 0.01).powi(t);
            for (x, x0) in model.flatten().iter().zip(&theta0) {
                assert!((x - f * x0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn non_finite_gradient_names_the_group_and_leaves_state_alone() {
    let model0 = Model::new(vec![ParameterGroup::vector("w", vec![1.0, 2.0]), ParameterGroup::vector("b", vec![0.5])]);
    let mut model = model0.clone();
    let mut opt = Novak::new(OptimizerConfig::default(), &model).unwrap();
    let grads = GradientSet::new(vec![vec![0.1, 0.2], vec![f64::INFINITY]]);
    let err = opt.step(&mut model, &grads).unwrap_err();
    assert!(matches!(&err, NovakError::Numeric(msg) if msg.contains("`b`")), "{err}");
    assert_eq!(model, model0);
    assert_eq!(opt.moments().t, 0);
}

#[test]
fn mismatched_gradients_are_rejected() {
    let mut model = Model::from_flat(vec![1.0, 2.0]);
    let mut opt = Novak::new(OptimizerConfig::default(), &model).unwrap();
    let grads = GradientSet::new(vec![vec![0.1]]);
    assert!(matches!(opt.step(&mut model, &grads), Err(NovakError::Dimension { .. })));
}

#[test]
fn beta_power_cache_tracks_the_step() {
    let mut model = Model::from_flat(vec![1.0]);
    let mut opt = Novak::new(quiet(), &model).unwrap();
    let g = GradientSet::new(vec![vec![0.3]]);
    for _ in 0..1500 {
        opt.step(&mut model, &g).unwrap();
    }
    let t = opt.moments().t;
    let expected1 = 0.9f64.powf(t as f64);
    let expected2 = 0.999f64.powf(t as f64);
    assert!((opt.moments().beta1_power - expected1).abs() <= 1e-12 * expected1);
    assert!((opt.moments().beta2_power - expected2).abs() <= 1e-12 * expected2);
}

#[test]
fn true_nesterov_requires_a_closure_and_restores_parameters() {
    let cfg = OptimizerConfig { nesterov_mode: NesterovMode::True, full_features_mode: true, n_taylor: 3, ..quiet() };
    let mut model = Model::from_flat(vec![1.0, -1.0]);
    let mut opt = Novak::new(cfg, &model).unwrap();
    let grad = |m: &Model| GradientSet::new(vec![m.flatten()]);
    let g = grad(&model);
    assert!(matches!(opt.clone().step(&mut model.clone(), &g), Err(NovakError::Config(_))));

    let mut seen = Vec::new();
    for _ in 0..5 {
        let g = grad(&model);
        let before = model.clone();
        let mut calls = 0;
        let mut closure = |m: &Model| {
            calls += 1;
            // the closure sees the extrapolated point, never the stored one
            seen.push(m.flatten());
            grad(m)
        };
        let report = opt.step_with_closure(&mut model, &g, &mut closure).unwrap();
        assert_eq!(report.used_closure, calls == 1);
        assert!(model != before);
    }
    // closure used for t = 1..=3, approximation afterwards
    assert_eq!(seen.len(), 3);
}

#[test]
fn identical_streams_give_bitwise_identical_trajectories() {
    let run = || {
        let mut model = Model::from_flat(vec![0.3, -0.7, 1.1]);
        let cfg = OptimizerConfig {
            adaptive_beta: true,
            use_gc: true,
            full_features_mode: true,
            layer_adaptation: true,
            auto_lr: true,
            lookahead_k: 3,
            ..Default::default()
        };
        let mut opt = Novak::new(cfg, &model).unwrap();
        let mut out = Vec::new();
        for i in 0..200 {
            let g: Vec<f64> = model.flatten().iter().map(|x| x * (1.0 + i as f64 * 0.01)).collect();
            opt.step(&mut model, &GradientSet::new(vec![g])).unwrap();
            out.extend(model.flatten().iter().map(|x| x.to_bits()));
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn coupled_decay_enters_through_the_gradient() {
    // With decoupled decay off, λθ is added to the gradient; a zero raw
    // gradient still produces an Adam-normalized step of size α at t = 1.
    let cfg = OptimizerConfig { decoupled_decay: false, weight_decay: 0.5, alpha: 0.01, ..quiet() };
    let mut model = Model::from_flat(vec![2.0]);
    let mut opt = Novak::new(cfg, &model).unwrap();
    let zero = GradientSet::zeros_like(&model);
    opt.step(&mut model, &zero).unwrap();
    let g = 0.5 * 2.0;
    let expected = 2.0 - 0.01 * g / (g * g + 1e-8f64).sqrt();
    assert!((model.flatten()[0] - expected).abs() < 1e-15);
}

#[test]
fn classical_mode_blends_momentum_into_the_direction() {
    let g = GradientSet::new(vec![vec![1.0]]);
    let mut plain = Model::from_flat(vec![0.0]);
    let mut blended = plain.clone();
    let mut a = Novak::new(quiet(), &plain).unwrap();
    let mut b = Novak::new(OptimizerConfig { nesterov_mode: NesterovMode::Classical, ..quiet() }, &blended).unwrap();
    a.step(&mut plain, &g).unwrap();
    b.step(&mut blended, &g).unwrap();
    // t = 1: m̂ = 1, u = 1/√(1+ε); blend = 0.9·1 + 0.1·u
    let u = 1.0 / (1.0 + 1e-8f64).sqrt();
    assert!((plain.flatten()[0] + 1e-3 * u).abs() < 1e-18);
    assert!((blended.flatten()[0] + 1e-3 * (0.9 + 0.1 * u)).abs() < 1e-18);
}

#[test]
fn layer_adaptation_scales_each_group() {
    let mut model = Model::new(vec![
        ParameterGroup::new("w", vec![3.0, 4.0], vec![1, 2], RoleTag::WeightMatrix).unwrap(),
        ParameterGroup::new("b", vec![0.0, 0.0], vec![2], RoleTag::Bias).unwrap(),
    ]);
    let cfg = OptimizerConfig { full_features_mode: true, layer_adaptation: true, ..quiet() };
    let mut opt = Novak::new(cfg, &model).unwrap();
    let g = GradientSet::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
    let report = opt.step(&mut model, &g).unwrap();
    // ‖θ_w‖ = 5, ‖u‖ ≈ √2 → 3.5355; zero bias → neutral 1
    assert!((report.trust_ratios[0] - 5.0 / 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(report.trust_ratios[1], 1.0);
}

#[test]
fn gradient_centralization_only_touches_matrices() {
    let mut model = Model::new(vec![
        ParameterGroup::new("w", vec![0.0; 4], vec![1, 4], RoleTag::WeightMatrix).unwrap(),
        ParameterGroup::new("b", vec![0.0; 4], vec![4], RoleTag::Bias).unwrap(),
    ]);
    let cfg = OptimizerConfig { use_gc: true, ..quiet() };
    let mut opt = Novak::new(cfg, &model).unwrap();
    let g = GradientSet::new(vec![vec![2.0; 4], vec![2.0; 4]]);
    opt.step(&mut model, &g).unwrap();
    assert!(opt.moments().m[0].iter().all(|&x| x == 0.0));
    assert!(opt.moments().m[1].iter().all(|&x| x > 0.0));
}

#[test]
fn sparse_threshold_freezes_small_components() {
    let mut model = Model::from_flat(vec![1.0, 1.0]);
    let cfg = OptimizerConfig { sparse_threshold: 0.5, ..quiet() };
    let mut opt = Novak::new(cfg, &model).unwrap();
    // u = g/|g| at t = 1 (up to ε), so a 1e-5 gradient still gives |u|≈1;
    // a gradient below √ε gives |u| < 0.5 and is masked.
    let g = GradientSet::new(vec![vec![1.0, 1e-5]]);
    opt.step(&mut model, &g).unwrap();
    let theta = model.flatten();
    assert!(theta[0] < 1.0);
    assert_eq!(theta[1], 1.0 - 1e-3 * 0.01);
}

#[test]
fn census_reflects_lookahead_mode() {
    let model = Model::from_flat(vec![0.0; 10]);
    let count = |mode, full| {
        let cfg = OptimizerConfig { lookahead_mode: mode, full_features_mode: full, ..Default::default() };
        let c = Novak::new(cfg, &model).unwrap().census(&model);
        (c.persistent_vectors(), c.transient_vectors())
    };
    assert_eq!(count(LookaheadMode::None, false), (3, 0));
    assert_eq!(count(LookaheadMode::Basic, true), (4, 0));
    assert_eq!(count(LookaheadMode::MemoryEfficient, false), (3, 2));
}
