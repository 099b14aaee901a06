use crate::error::Result;
use crate::lookahead::MemoryCensus;
use crate::param::{GradientSet, Model};

/// Gradient callback used by optimizers that re-evaluate the loss at a
/// different point (true Nesterov).
pub type GradientClosure<'a> = dyn FnMut(&Model) -> GradientSet + 'a;

/// Diagnostics from one optimizer step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    /// Step counter after this step.
    pub t: u64,
    /// Step size applied to the raw first moment (bias correction and
    /// rectification folded in; times the auto-LR factor when active).
    pub effective_lr: f64,
    pub rho_t: Option<f64>,
    /// Rectification factor, present on the rectified branch only.
    pub r_t: Option<f64>,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    /// Norm of the parameter change per group, excluding lookahead synchronization.
    pub update_norms: Vec<f64>,
    /// Per-group trust ratio (1 when layer adaptation is off).
    pub trust_ratios: Vec<f64>,
    pub auto_lr: Option<f64>,
    pub used_closure: bool,
    /// Whether a lookahead synchronization happened at the end of this step.
    pub synchronized: bool,
}

impl StepReport {
    /// Euclidean norm of the whole update.
    pub fn update_norm(&self) -> f64 {
        self.update_norms.iter().map(|n| n * n).sum::<f64>().sqrt()
    }
}

/// Common interface for the optimizer and the baselines.
pub trait Optimizer {
    fn name(&self) -> &str;

    fn step(&mut self, model: &mut Model, grads: &GradientSet) -> Result<StepReport>;

    /// Like [`step`](Optimizer::step), with a callback for extra gradient
    /// evaluations. Optimizers that never need one ignore it.
    fn step_with_closure(
        &mut self,
        model: &mut Model,
        grads: &GradientSet,
        _closure: &mut GradientClosure<'_>,
    ) -> Result<StepReport> {
        self.step(model, grads)
    }

    fn census(&self, model: &Model) -> MemoryCensus;

    /// Second-moment buffers, for optimizers that keep them.
    fn second_moments(&self) -> Option<&[Vec<f64>]> {
        None
    }
}
