//! Cascaded delay-interferometer networks and their propagation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{OpticsError, PathId, TemporalState, INPUT_PATH};
use crate::galois::FieldCtx;
use crate::matrix::inner;
use crate::mub::build_wf_basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// One interferometer per node of a p-ary tree, `(d-1)/(p-1)` in total.
    Tree,
    /// One interferometer per equivalent qudit, reused through delay lines.
    TimeDivisionMultiplexed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    /// Input splitter; loses a factor `1/p` per stage into side slots.
    Passive,
    /// Input splitter replaced by a timed router; lossless on designated slots.
    ActiveSwitch,
}

/// A `p`-arm delay interferometer: arm `a` delays by `a * delay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interferometer {
    pub arms: usize,
    pub delay: i64,
    pub switch_mode: SwitchMode,
    pub inputs: Vec<PathId>,
    pub outputs: Vec<PathId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayLine {
    pub path: PathId,
    pub delay: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkOp {
    Interferometer(Interferometer),
    Delay(DelayLine),
}

/// Outcome `n` is read at `outcomes[n] = (port, slot)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMap {
    pub outcomes: Vec<(PathId, i64)>,
}

impl DetectionMap {
    pub fn all_distinct(&self) -> bool {
        let mut seen = self.outcomes.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == self.outcomes.len()
    }
}

/// A complete analyzer for `B^(0)`: interferometers, delay lines, detectors.
#[derive(Debug, Clone)]
pub struct NetworkLayout {
    pub ctx: FieldCtx,
    pub topology: Topology,
    pub switch_mode: SwitchMode,
    pub ops: Vec<NetworkOp>,
    /// `τ′_k` after stage `k` (time-division multiplexing only).
    pub inter_stage_delays: Vec<i64>,
    pub detectors: Vec<PathId>,
    pub detection: DetectionMap,
    /// Row `n`: amplitude at the designated slot of outcome `n` per input slot.
    pub(crate) measurement_rows: Vec<Vec<Complex64>>,
}

impl NetworkLayout {
    pub fn new(
        ctx: &FieldCtx,
        topology: Topology,
        switch_mode: SwitchMode,
    ) -> Result<Self, OpticsError> {
        let (ops, inter_stage_delays, detectors) = match topology {
            Topology::TimeDivisionMultiplexed => build_tdm(ctx, switch_mode),
            Topology::Tree => build_tree(ctx, switch_mode),
        };
        let mut layout = NetworkLayout {
            ctx: ctx.clone(),
            topology,
            switch_mode,
            ops,
            inter_stage_delays,
            detectors,
            detection: DetectionMap { outcomes: vec![] },
            measurement_rows: vec![],
        };
        layout.locate_designated_slots()?;
        layout.check_branch_disjointness()?;
        Ok(layout)
    }

    pub fn stage_count(&self) -> usize {
        self.interferometers().count()
    }

    pub fn interferometers(&self) -> impl Iterator<Item = &Interferometer> {
        self.ops.iter().filter_map(|op| match op {
            NetworkOp::Interferometer(i) => Some(i),
            NetworkOp::Delay(_) => None,
        })
    }

    pub fn delay_lines(&self) -> impl Iterator<Item = &DelayLine> {
        self.ops.iter().filter_map(|op| match op {
            NetworkOp::Delay(l) => Some(l),
            NetworkOp::Interferometer(_) => None,
        })
    }

    /// Fraction of input probability that reaches designated slots.
    pub fn loss_factor(&self) -> f64 {
        let d = self.ctx.order() as f64;
        self.measurement_rows
            .iter()
            .map(|row| row.iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / d
    }

    pub fn loss_db(&self) -> f64 {
        -10.0 * self.loss_factor().log10()
    }

    pub fn measurement_rows(&self) -> &[Vec<Complex64>] {
        &self.measurement_rows
    }

    /// Response of every output `(port, slot)` to each unit input slot.
    fn impulse_responses(
        &self,
        mask: Option<(usize, usize)>,
    ) -> Result<Vec<TemporalState>, OpticsError> {
        (0..self.ctx.order())
            .map(|m| {
                let mut s = TemporalState::new();
                s.add(INPUT_PATH, m as i64, Complex64::new(1.0, 0.0));
                propagate_masked(self, &s, mask)
            })
            .collect()
    }

    /// Responses with all but one input of each multi-input interferometer blocked.
    fn branch_responses(&self) -> Result<Vec<Vec<Vec<TemporalState>>>, OpticsError> {
        let mut out = Vec::new();
        for (op_index, op) in self.ops.iter().enumerate() {
            if let NetworkOp::Interferometer(stage) = op {
                if stage.inputs.len() > 1 {
                    out.push(
                        (0..stage.inputs.len())
                            .map(|k| self.impulse_responses(Some((op_index, k))))
                            .collect::<Result<_, _>>()?,
                    );
                }
            }
        }
        Ok(out)
    }

    /// Number of inputs of each multi-input stage that feed `(port, slot)`.
    fn feeding_inputs(branches: &[Vec<Vec<TemporalState>>], key: (PathId, i64)) -> Vec<usize> {
        branches
            .iter()
            .map(|stage| {
                stage
                    .iter()
                    .filter(|responses| {
                        responses.iter().any(|s| s.get(key.0, key.1).norm() > 1e-12)
                    })
                    .count()
            })
            .collect()
    }

    /// Finds, for each outcome `n`, the unique output slot that is fed by a
    /// single branch and whose response is proportional to `⟨ψ_n^(0)|`.
    fn locate_designated_slots(&mut self) -> Result<(), OpticsError> {
        let d = self.ctx.order();
        let b0 = build_wf_basis(&self.ctx, 0)?;
        let columns: Vec<Vec<Complex64>> = (0..d).map(|n| b0.column(n)).collect();
        let responses = self.impulse_responses(None)?;
        let branches = self.branch_responses()?;

        let mut keys: Vec<(PathId, i64)> = responses
            .iter()
            .flat_map(|s| s.iter().map(|(p, t, _)| (p, t)))
            .collect();
        keys.sort_unstable();
        keys.dedup();

        // Candidate (port, slot) keys and their response rows, per outcome.
        type Candidate = ((PathId, i64), Vec<Complex64>);
        let mut found: Vec<Vec<Candidate>> = vec![vec![]; d];
        for key in keys {
            let row: Vec<Complex64> = responses.iter().map(|s| s.get(key.0, key.1)).collect();
            let norm = row.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            // row · ψ_n = ⟨conj(row)|ψ_n⟩; Cauchy–Schwarz equality means proportional.
            let conj_row: Vec<Complex64> = row.iter().map(|a| a.conj()).collect();
            for (n, col) in columns.iter().enumerate() {
                if inner(&conj_row, col).norm() >= norm * (1.0 - 1e-9)
                    && Self::feeding_inputs(&branches, key).iter().all(|&c| c <= 1)
                {
                    found[n].push((key, row.clone()));
                }
            }
        }

        let mut outcomes = Vec::with_capacity(d);
        let mut rows = Vec::with_capacity(d);
        for (n, hits) in found.into_iter().enumerate() {
            match hits.as_slice() {
                [(key, row)] => {
                    outcomes.push(*key);
                    rows.push(row.clone());
                }
                _ => return Err(OpticsError::AmbiguousDetection(n)),
            }
        }
        self.detection = DetectionMap { outcomes };
        self.measurement_rows = rows;
        Ok(())
    }

    /// Every designated slot must be fed through a single input port of each
    /// multi-input interferometer.
    pub fn check_branch_disjointness(&self) -> Result<(), OpticsError> {
        let branches = self.branch_responses()?;
        let stages: Vec<usize> = self
            .ops
            .iter()
            .enumerate()
            .filter_map(|(i, op)| match op {
                NetworkOp::Interferometer(s) if s.inputs.len() > 1 => Some(i),
                _ => None,
            })
            .collect();
        for (n, &key) in self.detection.outcomes.iter().enumerate() {
            let counts = Self::feeding_inputs(&branches, key);
            if let Some(k) = counts.iter().position(|&c| c > 1) {
                return Err(OpticsError::BranchOverlap {
                    outcome: n,
                    stage: stages[k],
                });
            }
        }
        Ok(())
    }
}

fn build_tdm(ctx: &FieldCtx, mode: SwitchMode) -> (Vec<NetworkOp>, Vec<i64>, Vec<PathId>) {
    let (p, n, d) = (ctx.p(), ctx.degree(), ctx.order());
    let mut ops = Vec::new();
    let mut taus = Vec::new();
    let mut next_path = INPUT_PATH + 1;
    let mut inputs = vec![INPUT_PATH];
    for k in 0..n {
        let outputs: Vec<PathId> = (next_path..next_path + p).collect();
        next_path += p;
        ops.push(NetworkOp::Interferometer(Interferometer {
            arms: p,
            delay: p.pow((n - 1 - k) as u32) as i64,
            switch_mode: mode,
            inputs,
            outputs: outputs.clone(),
        }));
        if k + 1 < n {
            // Offsets d·Σ c_k p^k keep branches at least d slots apart.
            let tau = (d * p.pow(k as u32)) as i64;
            taus.push(tau);
            for (c, &path) in outputs.iter().enumerate().skip(1) {
                ops.push(NetworkOp::Delay(DelayLine {
                    path,
                    delay: c as i64 * tau,
                }));
            }
        }
        inputs = outputs;
    }
    (ops, taus, inputs)
}

fn build_tree(ctx: &FieldCtx, mode: SwitchMode) -> (Vec<NetworkOp>, Vec<i64>, Vec<PathId>) {
    let (p, n) = (ctx.p(), ctx.degree());
    let mut ops = Vec::new();
    let mut next_path = INPUT_PATH + 1;
    let mut level = vec![INPUT_PATH];
    for k in 0..n {
        let mut next_level = Vec::with_capacity(level.len() * p);
        for &input in &level {
            let outputs: Vec<PathId> = (next_path..next_path + p).collect();
            next_path += p;
            ops.push(NetworkOp::Interferometer(Interferometer {
                arms: p,
                delay: p.pow((n - 1 - k) as u32) as i64,
                switch_mode: mode,
                inputs: vec![input],
                outputs: outputs.clone(),
            }));
            next_level.extend(outputs);
        }
        level = next_level;
    }
    (ops, vec![], level)
}

fn root(p: usize, k: usize) -> Complex64 {
    match (p, k % p) {
        (_, 0) => Complex64::new(1.0, 0.0),
        (2, _) => Complex64::new(-1.0, 0.0),
        (_, k) => Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64),
    }
}

fn apply_interferometer(
    stage: &Interferometer,
    d: usize,
    state: &mut TemporalState,
    keep_input: Option<usize>,
) {
    let p = stage.arms;
    let inv_sqrt_p = 1.0 / (p as f64).sqrt();
    let mut arrivals: Vec<(usize, i64, Complex64)> = Vec::new();
    for (i, &path) in stage.inputs.iter().enumerate() {
        let pulses = state.take_path(path);
        if keep_input.is_some_and(|k| k != i) {
            continue;
        }
        for (t, amp) in pulses {
            match stage.switch_mode {
                SwitchMode::Passive => {
                    // p×p DFT splitter: input i couples to arm a with ω^{a·i}/√p.
                    for a in 0..p {
                        arrivals.push((a, t, amp * root(p, a * i) * inv_sqrt_p));
                    }
                }
                SwitchMode::ActiveSwitch => {
                    // Route so that the pulse lands on the stage's last digit value.
                    let digit = (t.rem_euclid(d as i64) / stage.delay) as usize % p;
                    let arm = p - 1 - digit;
                    arrivals.push((arm, t, amp));
                }
            }
        }
    }
    for (arm, t, amp) in arrivals {
        let arrival = t + arm as i64 * stage.delay;
        for (c, &out) in stage.outputs.iter().enumerate() {
            state.add(out, arrival, amp * root(p, c * arm) * inv_sqrt_p);
        }
    }
}

pub(crate) fn propagate_masked(
    layout: &NetworkLayout,
    input: &TemporalState,
    mask: Option<(usize, usize)>,
) -> Result<TemporalState, OpticsError> {
    let d = layout.ctx.order();
    for (path, slot, _) in input.iter() {
        if path != INPUT_PATH || slot < 0 || slot >= d as i64 {
            return Err(OpticsError::WindowMismatch { path, slot });
        }
    }
    let mut state = input.clone();
    for (index, op) in layout.ops.iter().enumerate() {
        match op {
            NetworkOp::Interferometer(stage) => {
                let keep = mask.and_then(|(at, k)| (at == index).then_some(k));
                apply_interferometer(stage, d, &mut state, keep);
            }
            NetworkOp::Delay(line) => {
                for (t, amp) in state.take_path(line.path) {
                    state.add(line.path, t + line.delay, amp);
                }
            }
        }
    }
    Ok(state)
}

/// Full linear propagation; returns amplitudes on every detector `(port, slot)`.
pub fn propagate(
    layout: &NetworkLayout,
    state: &TemporalState,
) -> Result<TemporalState, OpticsError> {
    propagate_masked(layout, state, None)
}
