//! Slow/fast weight synchronization.
//!
//! Two schemes are supported:
//!
//! * **memory-efficient**: at the start of each window the current parameters
//!   are checkpointed and an offset accumulator `Δ` is zeroed. After every
//!   inner step `Δ += θ − θ₀`, so after `k` steps `Δ/k` is the mean offset of
//!   the fast iterates. Synchronization moves to `θ₀ + α_LA·Δ/k`, resets the
//!   fast weights there and opens a new window. The checkpoint and `Δ` are
//!   window-scoped buffers and are reported as transient.
//! * **basic**: a persistent copy of the slow weights is interpolated toward
//!   the latest fast weights every `k` steps.

use crate::error::{NovakError, Result};
use crate::novak::LookaheadMode;
use crate::param::Model;

/// Window state for the lookahead layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LookaheadState {
    mode: LookaheadMode,
    /// Window checkpoint (memory-efficient) or slow weights (basic).
    slow: Option<Vec<Vec<f64>>>,
    delta: Option<Vec<Vec<f64>>>,
    inner_step_index: usize,
}

impl LookaheadState {
    /// Creates the state and, unless the mode is `None`, opens the first window
    /// at the model's current parameters.
    pub fn new(mode: LookaheadMode, model: &Model) -> Self {
        let mut state = Self { mode, slow: None, delta: None, inner_step_index: 0 };
        if mode != LookaheadMode::None {
            state.open_window(model);
        }
        state
    }

    pub fn mode(&self) -> LookaheadMode {
        self.mode
    }

    pub fn inner_step_index(&self) -> usize {
        self.inner_step_index
    }

    /// The window checkpoint (memory-efficient) or the slow weights (basic).
    pub fn slow_weights(&self) -> Option<&[Vec<f64>]> {
        self.slow.as_deref()
    }

    pub fn delta(&self) -> Option<&[Vec<f64>]> {
        self.delta.as_deref()
    }

    /// Checkpoints the current parameters, zeroes `Δ` and resets the step index.
    pub fn begin_window(&mut self, model: &Model) -> Result<()> {
        if self.mode == LookaheadMode::None {
            return Err(NovakError::contract("begin_window called with lookahead disabled"));
        }
        self.open_window(model);
        Ok(())
    }

    fn open_window(&mut self, model: &Model) {
        self.slow = Some(model.snapshot());
        self.delta = match self.mode {
            LookaheadMode::MemoryEfficient => Some(model.groups().iter().map(|g| vec![0.0; g.len()]).collect()),
            _ => None,
        };
        self.inner_step_index = 0;
    }

    /// Adds this step's offset from the checkpoint into `Δ`.
    pub fn accumulate(&mut self, model: &Model, k: usize) -> Result<()> {
        if self.mode != LookaheadMode::MemoryEfficient {
            return Err(NovakError::contract(format!(
                "accumulate requires memory_efficient lookahead, state is {}",
                self.mode
            )));
        }
        if self.inner_step_index >= k {
            return Err(NovakError::contract(format!("window already holds {k} inner steps; synchronize first")));
        }
        let (slow, delta) = self.window_buffers()?;
        if slow.len() != model.groups().len() {
            return Err(NovakError::dimension("lookahead window", slow.len(), model.groups().len()));
        }
        for ((d, s), group) in delta.iter_mut().zip(slow.iter()).zip(model.groups()) {
            for ((di, &si), &xi) in d.iter_mut().zip(s).zip(group.values()) {
                *di += xi - si;
            }
        }
        self.inner_step_index += 1;
        Ok(())
    }

    /// Moves to `θ₀ + α_LA·Δ/k`, resets the fast weights there and opens a new window.
    pub fn sync(&mut self, model: &mut Model, alpha_la: f64, k: usize) -> Result<()> {
        if self.mode != LookaheadMode::MemoryEfficient {
            return Err(NovakError::contract(format!(
                "sync requires memory_efficient lookahead, state is {}",
                self.mode
            )));
        }
        self.require_full_window(k)?;
        let kf = k as f64;
        let (slow, delta) = self.window_buffers()?;
        for ((group, s), d) in model.groups_mut().iter_mut().zip(slow.iter()).zip(delta.iter()) {
            for ((x, &si), &di) in group.values_mut().iter_mut().zip(s).zip(d) {
                *x = si + alpha_la * (di / kf);
            }
        }
        self.open_window(model);
        Ok(())
    }

    /// Interpolates the slow weights toward the fast weights and resets the fast weights.
    pub fn basic_sync(&mut self, model: &mut Model, alpha_la: f64, k: usize) -> Result<()> {
        if self.mode != LookaheadMode::Basic {
            return Err(NovakError::contract(format!("basic_sync requires basic lookahead, state is {}", self.mode)));
        }
        self.require_full_window(k)?;
        let slow = self.slow.as_mut().ok_or_else(|| NovakError::contract("basic lookahead has no slow weights"))?;
        for (group, s) in model.groups_mut().iter_mut().zip(slow.iter_mut()) {
            for (x, si) in group.values_mut().iter_mut().zip(s.iter_mut()) {
                *si += alpha_la * (*x - *si);
                *x = *si;
            }
        }
        self.inner_step_index = 0;
        Ok(())
    }

    /// Runs the lookahead phase after an inner optimizer step.
    /// Returns whether a synchronization happened.
    pub fn after_inner_step(&mut self, model: &mut Model, alpha_la: f64, k: usize) -> Result<bool> {
        match self.mode {
            LookaheadMode::None => Ok(false),
            LookaheadMode::MemoryEfficient => {
                self.accumulate(model, k)?;
                if self.inner_step_index == k {
                    self.sync(model, alpha_la, k)?;
                    return Ok(true);
                }
                Ok(false)
            }
            LookaheadMode::Basic => {
                self.inner_step_index += 1;
                if self.inner_step_index == k {
                    self.basic_sync(model, alpha_la, k)?;
                    return Ok(true);
                }
                Ok(false)
            }
        }
    }

    fn require_full_window(&self, k: usize) -> Result<()> {
        if self.inner_step_index != k {
            return Err(NovakError::contract(format!(
                "synchronization after {} of {k} inner steps",
                self.inner_step_index
            )));
        }
        Ok(())
    }

    fn window_buffers(&mut self) -> Result<(&Vec<Vec<f64>>, &mut Vec<Vec<f64>>)> {
        match (&self.slow, &mut self.delta) {
            (Some(s), Some(d)) => Ok((s, d)),
            _ => Err(NovakError::contract("no open lookahead window")),
        }
    }

    /// Census entries for the buffers this state holds.
    pub fn census_entries(&self) -> Vec<CensusEntry> {
        let mut out = Vec::new();
        match self.mode {
            LookaheadMode::None => {}
            LookaheadMode::Basic => {
                if self.slow.is_some() {
                    out.push(CensusEntry::persistent(StateComponent::SlowWeights));
                }
            }
            LookaheadMode::MemoryEfficient => {
                if self.slow.is_some() {
                    out.push(CensusEntry::transient(StateComponent::SlowCheckpoint));
                }
                if self.delta.is_some() {
                    out.push(CensusEntry::transient(StateComponent::DeltaAccumulator));
                }
            }
        }
        out
    }
}

/// A parameter-length buffer held by an optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateComponent {
    Parameters,
    FirstMoment,
    SecondMoment,
    /// SGD velocity buffer.
    Momentum,
    /// Persistent slow weights of basic lookahead.
    SlowWeights,
    /// Window checkpoint of memory-efficient lookahead.
    SlowCheckpoint,
    DeltaAccumulator,
}

/// Whether a buffer lives across synchronization windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifetime {
    Persistent,
    /// Window-scoped; conceptually released at synchronization.
    Transient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusEntry {
    pub component: StateComponent,
    pub lifetime: Lifetime,
}

impl CensusEntry {
    pub fn persistent(component: StateComponent) -> Self {
        Self { component, lifetime: Lifetime::Persistent }
    }

    pub fn transient(component: StateComponent) -> Self {
        Self { component, lifetime: Lifetime::Transient }
    }
}

/// Live parameter-length vectors held by a model plus its optimizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryCensus {
    pub entries: Vec<CensusEntry>,
    /// Length `p` of each vector.
    pub vector_len: usize,
}

impl MemoryCensus {
    pub fn persistent_vectors(&self) -> usize {
        self.count(Lifetime::Persistent)
    }

    pub fn transient_vectors(&self) -> usize {
        self.count(Lifetime::Transient)
    }

    pub fn live_vectors(&self) -> usize {
        self.entries.len()
    }

    pub fn persistent_scalars(&self) -> usize {
        self.persistent_vectors() * self.vector_len
    }

    pub fn contains(&self, component: StateComponent) -> bool {
        self.entries.iter().any(|e| e.component == component)
    }

    fn count(&self, lifetime: Lifetime) -> usize {
        self.entries.iter().filter(|e| e.lifetime == lifetime).count()
    }
}

/// Census of an adaptive optimizer (parameters, `m`, `v`) plus its lookahead buffers.
pub fn state_memory_census(lookahead: &LookaheadState, vector_len: usize) -> MemoryCensus {
    let mut entries = vec![
        CensusEntry::persistent(StateComponent::Parameters),
        CensusEntry::persistent(StateComponent::FirstMoment),
        CensusEntry::persistent(StateComponent::SecondMoment),
    ];
    entries.extend(lookahead.census_entries());
    MemoryCensus { entries, vector_len }
}
