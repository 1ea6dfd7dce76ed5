//! Linear-optics model of the time-bin phase-basis analyzer.
//!
//! A `d`-dimensional time-bin state occupies slots `0..d` (pitch 1) on the
//! input path. A phase modulator applies `D^(r)†`, then cascaded delay
//! interferometers project onto the tensor-product basis `B^(0)`. Each
//! outcome is read from one designated `(port, slot)` pair; everything else
//! is discarded by temporal filtering.

mod measure;
mod network;

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::galois::FieldCtx;
use crate::mub::{build_diag, build_wf_basis, Basis, MubError};

pub use measure::{
    conditional_probabilities, extract_povm, Analyzer, Channel, ConditionalTable, IdentityChannel,
};
pub use network::{
    propagate, DelayLine, DetectionMap, Interferometer, NetworkLayout, NetworkOp, SwitchMode,
    Topology,
};

pub type PathId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("state has amplitude outside the input window (path {path}, slot {slot})")]
    WindowMismatch { path: PathId, slot: i64 },
    #[error("index {index} out of range for dimension {d}")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("could not locate a unique designated slot for outcome {0}")]
    AmbiguousDetection(usize),
    #[error("designated slot for outcome {outcome} mixes branches at stage {stage}")]
    BranchOverlap { outcome: usize, stage: usize },
    #[error(transparent)]
    Mub(#[from] MubError),
}

/// Sparse complex amplitudes over `(path, slot)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemporalState {
    amplitudes: BTreeMap<(PathId, i64), Complex64>,
}

impl TemporalState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Amplitudes `amps[m]` placed in slots `0..len` of `path`.
    pub fn from_slots(path: PathId, amps: &[Complex64]) -> Self {
        let mut state = Self::new();
        for (m, &a) in amps.iter().enumerate() {
            state.add(path, m as i64, a);
        }
        state
    }

    pub fn get(&self, path: PathId, slot: i64) -> Complex64 {
        self.amplitudes
            .get(&(path, slot))
            .copied()
            .unwrap_or_default()
    }

    pub fn add(&mut self, path: PathId, slot: i64, amp: Complex64) {
        *self.amplitudes.entry((path, slot)).or_default() += amp;
    }

    pub fn iter(&self) -> impl Iterator<Item = (PathId, i64, Complex64)> + '_ {
        self.amplitudes.iter().map(|(&(p, t), &a)| (p, t, a))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Slot amplitudes `0..d` on `path`.
    pub fn window(&self, path: PathId, d: usize) -> Vec<Complex64> {
        (0..d as i64).map(|t| self.get(path, t)).collect()
    }

    pub(crate) fn take_path(&mut self, path: PathId) -> Vec<(i64, Complex64)> {
        let keys: Vec<(PathId, i64)> = self
            .amplitudes
            .range((path, i64::MIN)..=(path, i64::MAX))
            .map(|(k, _)| *k)
            .collect();
        keys.into_iter()
            .map(|k| (k.1, self.amplitudes.remove(&k).unwrap_or_default()))
            .collect()
    }
}

/// Input path of every network.
pub const INPUT_PATH: PathId = 0;

/// Time-bin encoding of state `n` of `basis` (Wootters–Fields labels).
pub fn encode_state(ctx: &FieldCtx, basis: Basis, n: usize) -> Result<TemporalState, OpticsError> {
    let d = ctx.order();
    if n >= d {
        return Err(OpticsError::IndexOutOfRange { index: n, d });
    }
    match basis {
        Basis::Z => {
            let mut state = TemporalState::new();
            state.add(INPUT_PATH, n as i64, Complex64::new(1.0, 0.0));
            Ok(state)
        }
        Basis::Phase(r) => {
            let b = build_wf_basis(ctx, r)?;
            Ok(TemporalState::from_slots(INPUT_PATH, &b.column(n)))
        }
    }
}

/// Basis selection: multiplies slot `m` by `conj(D^(r)_mm)`.
pub fn apply_phase_mod(
    ctx: &FieldCtx,
    state: &TemporalState,
    r: usize,
) -> Result<TemporalState, OpticsError> {
    let d = ctx.order();
    let diag = build_diag(ctx, r)?;
    let mut out = TemporalState::new();
    for (path, slot, amp) in state.iter() {
        if path != INPUT_PATH || slot < 0 || slot >= d as i64 {
            return Err(OpticsError::WindowMismatch { path, slot });
        }
        let m = slot as usize;
        out.add(path, slot, amp * diag[(m, m)].conj());
    }
    Ok(out)
}
