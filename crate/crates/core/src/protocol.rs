//! Monte-Carlo simulation of the (d+1)-basis prepare-and-measure protocol.
//!
//! Alice sends `|e_a^(r)⟩` (Durt labels, Z at basis index `d`), the channel
//! applies `V_ij†` with probability `λ_ij`, and Bob measures in his own
//! randomly chosen basis. With this convention the matched-basis error
//! `t = a ⊖ b` is distributed exactly as `q_from_lambda(λ)`.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::FieldCtx;
use crate::matrix::{inner, ComplexMatrix};
use crate::mub::{equivalence_map, weyl, weyl_adjoint_apply, Basis, EquivalenceMap, MubFamily};
use crate::optics::{Analyzer, Channel, NetworkLayout, OpticsError, SwitchMode, Topology};
use crate::security::{
    correlated_lambda, key_rate_bound_from_stats, key_rate_full, lambda_from_q, ErrorStats,
    LambdaMatrix, RateReport, SecurityError, Source, SUM_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no detected events in matched block {0:?}")]
    InsufficientData(Basis),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Security(#[from] SecurityError),
}

/// Bell-diagonal (twirled) channel, applied as a mixture of Weyl operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum ChannelModel {
    Identity,
    /// Strength `s`: `λ00 = 1 − s(d²−1)/d²`, every other weight `s/d²`.
    Depolarizing(f64),
    /// Correlated shift noise with Z-basis symbol error `e_Z`.
    CorrelatedShift(f64),
    BellDiagonal(LambdaMatrix),
}

impl ChannelModel {
    /// Depolarizing channel whose symbol error is `e` in every basis.
    pub fn depolarizing_for_error(d: usize, e: f64) -> Self {
        ChannelModel::Depolarizing(e * d as f64 / (d - 1) as f64)
    }

    pub fn weights(&self, ctx: &FieldCtx) -> Result<LambdaMatrix, ProtocolError> {
        let d = ctx.order();
        let dd = (d * d) as f64;
        let lambda = match self {
            ChannelModel::Identity => LambdaMatrix::from_fn(d, |j, k| f64::from(j == 0 && k == 0)),
            &ChannelModel::Depolarizing(s) => {
                if !(0.0..=dd / (dd - 1.0)).contains(&s) {
                    return Err(ProtocolError::InvalidConfig(format!(
                        "depolarizing strength {s} outside [0, d²/(d²−1)]"
                    )));
                }
                LambdaMatrix::from_fn(d, |j, k| {
                    if j == 0 && k == 0 {
                        1.0 - s * (dd - 1.0) / dd
                    } else {
                        s / dd
                    }
                })
            }
            &ChannelModel::CorrelatedShift(e_z) => {
                if !(0.0..1.0).contains(&e_z) {
                    return Err(ProtocolError::InvalidConfig(format!(
                        "e_Z = {e_z} outside [0, 1)"
                    )));
                }
                correlated_lambda(d, e_z)
            }
            ChannelModel::BellDiagonal(lambda) => {
                if lambda.d != d {
                    return Err(ProtocolError::InvalidConfig(format!(
                        "λ has dimension {}, field has {d}",
                        lambda.d
                    )));
                }
                lambda.clone()
            }
        };
        if lambda.values.iter().any(|&x| x < 0.0) || (lambda.sum() - 1.0).abs() > SUM_TOL {
            return Err(ProtocolError::InvalidConfig(
                "channel weights are not a probability distribution".into(),
            ));
        }
        Ok(lambda)
    }
}

/// Kraus form `√λ_ij V_ij†`, for exact conditional probabilities.
pub struct WeylMixture {
    pub lambda: LambdaMatrix,
}

impl Channel for WeylMixture {
    fn kraus_operators(&self, ctx: &FieldCtx) -> Vec<ComplexMatrix> {
        self.lambda
            .entries()
            .filter(|e| e.2 > 0.0)
            .map(|(i, j, w)| {
                weyl(ctx, i, j)
                    .adjoint()
                    .scale(Complex64::new(w.sqrt(), 0.0))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Projective measurement on the ideal basis states.
    IdealPovm,
    /// Phase bases analyzed by the simulated interferometer network.
    Optics {
        topology: Topology,
        switch_mode: SwitchMode,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub ctx: FieldCtx,
    pub trials: u64,
    pub seed: u64,
    /// Selection probability of each basis, Z last; shared by Alice and Bob.
    pub basis_probs: Vec<f64>,
    pub backend: Backend,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Uniform basis choice over all `d + 1` bases.
    pub fn uniform(ctx: &FieldCtx, trials: u64, seed: u64) -> Self {
        let d = ctx.order();
        RunConfig {
            ctx: ctx.clone(),
            trials,
            seed,
            basis_probs: vec![1.0 / (d + 1) as f64; d + 1],
            backend: Backend::IdealPovm,
            threads: None,
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        let d = self.ctx.order();
        if self.basis_probs.len() != d + 1 {
            return Err(ProtocolError::InvalidConfig(format!(
                "expected {} basis probabilities, got {}",
                d + 1,
                self.basis_probs.len()
            )));
        }
        let sum: f64 = self.basis_probs.iter().sum();
        if self.basis_probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > SUM_TOL {
            return Err(ProtocolError::InvalidConfig(format!(
                "basis probabilities must be a distribution (sum {sum})"
            )));
        }
        if self.threads == Some(0) {
            return Err(ProtocolError::InvalidConfig(
                "threads must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Detection counts `counts[r_a][n_a][r_b][n_b]` over `d + 1` bases (Z = `d`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyMatrix {
    pub d: usize,
    pub counts: Vec<u64>,
    /// Trials without a detection, indexed `[r_a][n_a][r_b]`.
    pub undetected: Vec<u64>,
}

impl TallyMatrix {
    pub fn new(d: usize) -> Self {
        let b = d + 1;
        TallyMatrix {
            d,
            counts: vec![0; b * d * b * d],
            undetected: vec![0; b * d * b],
        }
    }

    fn block(&self, r_a: usize, n_a: usize, r_b: usize) -> usize {
        (r_a * self.d + n_a) * (self.d + 1) + r_b
    }

    fn index(&self, r_a: usize, n_a: usize, r_b: usize, n_b: usize) -> usize {
        self.block(r_a, n_a, r_b) * self.d + n_b
    }

    pub fn count(&self, a: Basis, n_a: usize, b: Basis, n_b: usize) -> u64 {
        self.counts[self.index(a.index(self.d), n_a, b.index(self.d), n_b)]
    }

    pub fn detected(&self, a: Basis, n_a: usize, b: Basis) -> u64 {
        (0..self.d).map(|n_b| self.count(a, n_a, b, n_b)).sum()
    }

    pub fn total_detected(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_undetected(&self) -> u64 {
        self.undetected.iter().sum()
    }

    /// `P(n_b | r_a, n_a, r_b)` over detected events; `None` for an empty row.
    pub fn conditional(&self, a: Basis, n_a: usize, b: Basis, n_b: usize) -> Option<f64> {
        let total = self.detected(a, n_a, b);
        (total > 0).then(|| self.count(a, n_a, b, n_b) as f64 / total as f64)
    }

    fn merge(mut self, other: &Self) -> Self {
        for (x, y) in self.counts.iter_mut().zip(&other.counts) {
            *x += y;
        }
        for (x, y) in self.undetected.iter_mut().zip(&other.undetected) {
            *x += y;
        }
        self
    }
}

enum Measurement {
    Ideal,
    Optics {
        analyzer: Analyzer,
        map: EquivalenceMap,
        inverse: Vec<Vec<usize>>,
    },
}

struct Simulator {
    ctx: FieldCtx,
    states: Vec<Vec<Vec<Complex64>>>,
    basis_dist: WeightedIndex<f64>,
    channel_dist: WeightedIndex<f64>,
    measurement: Measurement,
}

impl Simulator {
    fn new(config: &RunConfig, lambda: &LambdaMatrix) -> Result<Self, ProtocolError> {
        let ctx = config.ctx.clone();
        let d = ctx.order();
        let family = MubFamily::durt(&ctx);
        let states = family
            .bases
            .iter()
            .map(|b| (0..d).map(|n| b.column(n)).collect())
            .collect();
        let measurement = match config.backend {
            Backend::IdealPovm => Measurement::Ideal,
            Backend::Optics {
                topology,
                switch_mode,
            } => {
                let layout = NetworkLayout::new(&ctx, topology, switch_mode)?;
                let map = equivalence_map(&ctx);
                let inverse = (0..d).map(|r| map.inverse_state_perm(r)).collect();
                Measurement::Optics {
                    analyzer: Analyzer::new(&layout)?,
                    map,
                    inverse,
                }
            }
        };
        let invalid = |e: rand::distr::weighted::Error| ProtocolError::InvalidConfig(e.to_string());
        Ok(Simulator {
            basis_dist: WeightedIndex::new(&config.basis_probs).map_err(invalid)?,
            channel_dist: WeightedIndex::new(&lambda.values).map_err(invalid)?,
            ctx,
            states,
            measurement,
        })
    }

    /// Outcome probabilities of Bob's measurement; a shortfall from 1 is loss.
    fn outcome_probabilities(&self, r_b: usize, psi: &[Complex64]) -> Vec<f64> {
        let d = self.ctx.order();
        match &self.measurement {
            Measurement::Ideal => self.states[r_b]
                .iter()
                .map(|e| inner(e, psi).norm_sqr())
                .collect(),
            Measurement::Optics {
                analyzer,
                map,
                inverse,
            } => {
                if r_b == d {
                    return analyzer.click_probabilities(Basis::Z, psi);
                }
                let wf = analyzer.click_probabilities(Basis::Phase(map.basis_perm[r_b]), psi);
                let mut out = vec![0.0; d];
                for (n_wf, p) in wf.into_iter().enumerate() {
                    out[inverse[r_b][n_wf]] = p;
                }
                out
            }
        }
    }

    fn trial(&self, rng: &mut ChaCha8Rng, tally: &mut TallyMatrix) {
        let d = self.ctx.order();
        let r_a = self.basis_dist.sample(rng);
        let n_a = rng.random_range(0..d);
        let r_b = self.basis_dist.sample(rng);
        let w = self.channel_dist.sample(rng);
        let psi = weyl_adjoint_apply(&self.ctx, w / d, w % d, &self.states[r_a][n_a]);
        let probs = self.outcome_probabilities(r_b, &psi);

        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut outcome = None;
        for (n, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = Some(n);
                break;
            }
        }
        // Rounding can leave the lossless total a hair under 1.
        if outcome.is_none() && acc > 1.0 - 1e-9 {
            outcome = probs.iter().rposition(|&p| p > 0.0);
        }
        match outcome {
            Some(n_b) => {
                let i = tally.index(r_a, n_a, r_b, n_b);
                tally.counts[i] += 1;
            }
            None => {
                let i = tally.block(r_a, n_a, r_b);
                tally.undetected[i] += 1;
            }
        }
    }
}

/// Runs `config.trials` independent trials. Trial `k` draws from ChaCha8
/// stream `k` of `config.seed`, so the tally does not depend on threading.
pub fn run_protocol(
    config: &RunConfig,
    channel: &ChannelModel,
) -> Result<TallyMatrix, ProtocolError> {
    config.validate()?;
    let lambda = channel.weights(&config.ctx)?;
    let sim = Simulator::new(config, &lambda)?;
    let d = config.ctx.order();
    let base = ChaCha8Rng::seed_from_u64(config.seed);

    let run = || {
        (0..config.trials)
            .into_par_iter()
            .fold(
                || TallyMatrix::new(d),
                |mut tally, k| {
                    let mut rng = base.clone();
                    rng.set_stream(k);
                    sim.trial(&mut rng, &mut tally);
                    tally
                },
            )
            .reduce(|| TallyMatrix::new(d), |a, b| a.merge(&b))
    };
    match config.threads {
        None => Ok(run()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ProtocolError::InvalidConfig(e.to_string()))
            .map(|pool| pool.install(run)),
    }
}

/// Empirical error vectors from matched-basis events.
pub fn stats_from_tally(ctx: &FieldCtx, tally: &TallyMatrix) -> Result<ErrorStats, ProtocolError> {
    let d = ctx.order();
    let vector = |basis: Basis| -> Result<Vec<f64>, ProtocolError> {
        let mut q = vec![0u64; d];
        for a in 0..d {
            for b in 0..d {
                q[ctx.sub(a, b)] += tally.count(basis, a, basis, b);
            }
        }
        let total: u64 = q.iter().sum();
        if total == 0 {
            return Err(ProtocolError::InsufficientData(basis));
        }
        Ok(q.into_iter().map(|c| c as f64 / total as f64).collect())
    };
    Ok(ErrorStats {
        q_z: vector(Basis::Z)?,
        q_phase: (0..d)
            .map(|r| vector(Basis::Phase(r)))
            .collect::<Result<_, _>>()?,
        source: Source::Sampled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub stats: ErrorStats,
    pub lambda: LambdaMatrix,
    /// Present only when the sampled λ is physical.
    pub full: Option<RateReport>,
    pub bound: RateReport,
}

pub fn end_to_end(
    config: &RunConfig,
    channel: &ChannelModel,
) -> Result<EndToEndReport, ProtocolError> {
    let tally = run_protocol(config, channel)?;
    let stats = stats_from_tally(&config.ctx, &tally)?;
    report_from_stats(&config.ctx, stats)
}

/// Full-λ rate (when physical) and the average-error bound for `stats`.
pub fn report_from_stats(
    ctx: &FieldCtx,
    stats: ErrorStats,
) -> Result<EndToEndReport, ProtocolError> {
    let lambda = lambda_from_q(ctx, &stats);
    let full = match key_rate_full(&lambda) {
        Ok(report) => Some(report),
        Err(SecurityError::Unphysical(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let bound = key_rate_bound_from_stats(ctx, &stats)?;
    Ok(EndToEndReport {
        stats,
        lambda,
        full,
        bound,
    })
}
