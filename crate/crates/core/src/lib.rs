//! NOVAK: an adaptive gradient optimizer combining rectified moment
//! estimates, Nesterov-style lookahead gradients, decoupled weight decay,
//! layer-wise trust ratios and a memory-efficient lookahead wrapper.
//!
//! The crate also ships the baselines it is compared against, a handful of
//! differentiable test problems, independent reference implementations used
//! by the test suite, and an experiment harness writing CSV trajectories.

// Range checks are written `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod baselines;
pub mod checks;
pub mod error;
pub mod harness;
pub mod lookahead;
pub mod novak;
pub mod optim;
pub mod oracles;
pub mod param;
pub mod problems;

pub use baselines::{Baseline, BaselineConfig, BaselineKind};
pub use error::{NovakError, Result};
pub use lookahead::{LookaheadState, MemoryCensus};
pub use novak::{AutoLrVariant, LookaheadMode, MomentState, NesterovMode, Novak, OptimizerConfig, Preset};
pub use optim::{GradientClosure, Optimizer, StepReport};
pub use param::{GradientSet, Model, ParameterGroup, RoleTag};
pub use problems::Problem;
