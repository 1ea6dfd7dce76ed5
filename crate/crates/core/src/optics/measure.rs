//! POVMs and detection statistics of an analyzer network.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{NetworkLayout, OpticsError};
use crate::galois::FieldCtx;
use crate::matrix::ComplexMatrix;
use crate::mub::{build_diag, build_wf_basis, Basis};

/// A completely positive map given by Kraus operators.
pub trait Channel {
    fn kraus_operators(&self, ctx: &FieldCtx) -> Vec<ComplexMatrix>;
}

/// The noiseless channel.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityChannel;

impl Channel for IdentityChannel {
    fn kraus_operators(&self, ctx: &FieldCtx) -> Vec<ComplexMatrix> {
        vec![ComplexMatrix::identity(ctx.order())]
    }
}

/// POVM of the `B^(0)` analyzer, read from the designated slots.
pub fn extract_povm(layout: &NetworkLayout) -> Vec<ComplexMatrix> {
    layout
        .measurement_rows
        .iter()
        .map(|row| {
            let v: Vec<Complex64> = row.iter().map(|a| a.conj()).collect();
            ComplexMatrix::outer(&v)
        })
        .collect()
}

/// Detection probabilities of a layout for any basis of the family.
///
/// Phase bases go through the phase modulator and the network; the Z basis
/// is read directly by arrival time and is lossless.
#[derive(Debug, Clone)]
pub struct Analyzer {
    ctx: FieldCtx,
    rows: Vec<Vec<Complex64>>,
    diag_conj: Vec<Vec<Complex64>>,
}

impl Analyzer {
    pub fn new(layout: &NetworkLayout) -> Result<Self, OpticsError> {
        let ctx = layout.ctx.clone();
        let d = ctx.order();
        let diag_conj = (0..d)
            .map(|r| {
                let diag = build_diag(&ctx, r)?;
                Ok((0..d).map(|m| diag[(m, m)].conj()).collect())
            })
            .collect::<Result<_, OpticsError>>()?;
        Ok(Analyzer {
            ctx,
            rows: layout.measurement_rows.clone(),
            diag_conj,
        })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    /// Click probability per outcome for a pure input; the remainder is loss.
    pub fn click_probabilities(&self, basis: Basis, psi: &[Complex64]) -> Vec<f64> {
        match basis {
            Basis::Z => psi.iter().map(|a| a.norm_sqr()).collect(),
            Basis::Phase(r) => {
                let modulated: Vec<Complex64> = psi
                    .iter()
                    .zip(&self.diag_conj[r])
                    .map(|(a, c)| a * c)
                    .collect();
                self.rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(&modulated)
                            .map(|(w, a)| w * a)
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .collect()
            }
        }
    }
}

/// `probs[r_a][n_a][r_b][n_b]` over all `d + 1` bases (Z at index `d`),
/// normalized over detected events. Labels follow the Wootters–Fields bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub d: usize,
    pub probs: Vec<Vec<Vec<Vec<f64>>>>,
    /// Detection probability before conditioning, same indexing minus `n_b`.
    pub detection: Vec<Vec<Vec<f64>>>,
}

impl ConditionalTable {
    pub fn get(&self, a: Basis, n_a: usize, b: Basis, n_b: usize) -> f64 {
        self.probs[a.index(self.d)][n_a][b.index(self.d)][n_b]
    }

    /// Mean probability of `n_b ≠ n_a` when both sides use basis `r`.
    pub fn matched_error(&self, r: Basis) -> f64 {
        let i = r.index(self.d);
        (0..self.d)
            .map(|n| 1.0 - self.probs[i][n][i][n])
            .sum::<f64>()
            / self.d as f64
    }
}

/// `P(n_b | r_a, n_a, r_b)` for states sent through `channel` and analyzed by `layout`.
pub fn conditional_probabilities(
    ctx: &FieldCtx,
    layout: &NetworkLayout,
    channel: &dyn Channel,
) -> Result<ConditionalTable, OpticsError> {
    let d = ctx.order();
    let analyzer = Analyzer::new(layout)?;
    let kraus = channel.kraus_operators(ctx);
    let mut senders: Vec<ComplexMatrix> = (0..d)
        .map(|r| build_wf_basis(ctx, r))
        .collect::<Result<_, _>>()?;
    senders.push(ComplexMatrix::identity(d));

    let mut probs = vec![vec![vec![vec![0.0; d]; d + 1]; d]; d + 1];
    let mut detection = vec![vec![vec![0.0; d + 1]; d]; d + 1];
    for (ia, sender) in senders.iter().enumerate() {
        for n_a in 0..d {
            let psi = sender.column(n_a);
            let outputs: Vec<Vec<Complex64>> = kraus.iter().map(|k| k.apply(&psi)).collect();
            for b in Basis::all(d) {
                let ib = b.index(d);
                let mut clicks = vec![0.0; d];
                for out in &outputs {
                    for (acc, p) in clicks.iter_mut().zip(analyzer.click_probabilities(b, out)) {
                        *acc += p;
                    }
                }
                let total: f64 = clicks.iter().sum();
                detection[ia][n_a][ib] = total;
                if total > 0.0 {
                    for (slot, c) in probs[ia][n_a][ib].iter_mut().zip(&clicks) {
                        *slot = c / total;
                    }
                }
            }
        }
    }
    Ok(ConditionalTable {
        d,
        probs,
        detection,
    })
}
