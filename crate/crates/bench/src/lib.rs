//! Workloads shared by the step benchmarks.

use novak_core::{GradientSet, Model, ParameterGroup, RoleTag};

/// A model shaped like a small MLP: `layers` square weight matrices of side
/// `width`, each followed by a bias vector.
pub fn mlp_like_model(layers: usize, width: usize) -> Model {
    let mut groups = Vec::with_capacity(2 * layers);
    for l in 0..layers {
        let w = (0..width * width).map(|i| ((i * 7919 + l * 104_729) % 1000) as f64 / 1000.0 - 0.5).collect();
        groups.push(
            ParameterGroup::new(format!("w{l}"), w, vec![width, width], RoleTag::WeightMatrix).expect("valid shape"),
        );
        groups.push(
            ParameterGroup::new(format!("b{l}"), vec![0.01; width], vec![width], RoleTag::Bias).expect("valid shape"),
        );
    }
    Model::new(groups)
}

/// A fixed pseudo-gradient: the parameters scaled and shifted, so every
/// step sees a nonzero, non-constant input.
pub fn synthetic_gradient(model: &Model) -> GradientSet {
    GradientSet::new(model.groups().iter().map(|g| g.values().iter().map(|x| 0.1 * x + 0.01).collect()).collect())
}
