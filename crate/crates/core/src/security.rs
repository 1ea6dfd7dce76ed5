//! Asymptotic key rates for the (d+1)-basis and two-basis protocols.
//!
//! Error vectors and Bell-diagonal coefficients use Durt-form labels: the
//! error `t` in phase basis `r` is the field difference `a ⊖ b` between
//! Alice's and Bob's outcomes, and `λ_jk` weights `|Φ_jk⟩ = (V_jk ⊗ I)|Φ_00⟩`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::FieldCtx;

/// Entries in `(-CLAMP_TOL, 0)` are treated as rounding noise.
pub const CLAMP_TOL: f64 = 1e-9;
/// Probability vectors must sum to one within this tolerance.
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecurityError {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("unphysical λ: negative entries {}", format_entries(.0))]
    Unphysical(Vec<(usize, usize, f64)>),
    #[error("{0} does not sum to 1 (sum {1})")]
    NotNormalized(&'static str, f64),
    #[error("expected {expected} values for {what}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rate has no sign change on the search interval")]
    NoThreshold,
}

fn format_entries(entries: &[(usize, usize, f64)]) -> String {
    entries
        .iter()
        .map(|(j, k, v)| format!("λ[{j}][{k}]={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Shannon entropy in bits with `0·log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Sampled,
}

/// Error distributions: `q_z[t]` and `q_phase[r][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub q_z: Vec<f64>,
    pub q_phase: Vec<Vec<f64>>,
    pub source: Source,
}

impl ErrorStats {
    pub fn d(&self) -> usize {
        self.q_z.len()
    }

    pub fn validate(&self) -> Result<(), SecurityError> {
        let d = self.d();
        if self.q_phase.len() != d {
            return Err(SecurityError::Shape {
                what: "phase error vectors",
                expected: d,
                got: self.q_phase.len(),
            });
        }
        for q in std::iter::once(&self.q_z).chain(&self.q_phase) {
            if q.len() != d {
                return Err(SecurityError::Shape {
                    what: "error vector",
                    expected: d,
                    got: q.len(),
                });
            }
            if let Some(&x) = q.iter().find(|&&x| x < 0.0) {
                return Err(SecurityError::OutOfRange {
                    name: "error probability",
                    value: x,
                    min: 0.0,
                    max: 1.0,
                });
            }
            let sum: f64 = q.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(SecurityError::NotNormalized("error vector", sum));
            }
        }
        Ok(())
    }

    /// Summed over the non-zero shifts, so an error-free basis gives exactly 0.
    pub fn e_z(&self) -> f64 {
        self.q_z[1..].iter().sum()
    }

    pub fn e_phase(&self, r: usize) -> f64 {
        self.q_phase[r][1..].iter().sum()
    }

    /// Symbol error averaged over all `d + 1` bases.
    pub fn average_error(&self) -> f64 {
        let d = self.d();
        ((0..d).map(|r| self.e_phase(r)).sum::<f64>() + self.e_z()) / (d + 1) as f64
    }

    /// Symbol error averaged over the `d` phase bases only.
    pub fn phase_average_error(&self) -> f64 {
        let d = self.d();
        (0..d).map(|r| self.e_phase(r)).sum::<f64>() / d as f64
    }
}

/// Bell-diagonal coefficients `λ_jk`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMatrix {
    pub d: usize,
    pub values: Vec<f64>,
}

impl LambdaMatrix {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self, SecurityError> {
        if values.len() != d * d {
            return Err(SecurityError::Shape {
                what: "λ matrix",
                expected: d * d,
                got: values.len(),
            });
        }
        Ok(LambdaMatrix { d, values })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        LambdaMatrix {
            d,
            values: (0..d * d).map(|x| f(x / d, x % d)).collect(),
        }
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.d + k]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Entries at or below `-CLAMP_TOL`.
    pub fn negative_entries(&self) -> Vec<(usize, usize, f64)> {
        self.entries().filter(|e| e.2 <= -CLAMP_TOL).collect()
    }

    pub fn is_physical(&self) -> bool {
        self.values.iter().all(|&x| x > -CLAMP_TOL)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(x, &v)| (x / self.d, x % self.d, v))
    }
}

/// `q_Z^t = Σ_k λ_tk`, `q_r^t = Σ_j λ_{j, r⊙j ⊖ t}`.
pub fn q_from_lambda(ctx: &FieldCtx, lambda: &LambdaMatrix) -> ErrorStats {
    let d = ctx.order();
    let q_z = (0..d)
        .map(|t| (0..d).map(|k| lambda.get(t, k)).sum())
        .collect();
    let q_phase = (0..d)
        .map(|r| {
            (0..d)
                .map(|t| {
                    (0..d)
                        .map(|j| lambda.get(j, ctx.sub(ctx.mul(r, j), t)))
                        .sum()
                })
                .collect()
        })
        .collect();
    ErrorStats {
        q_z,
        q_phase,
        source: Source::Analytic,
    }
}

/// `λ_jk = (Σ_s q_s^{s⊙j ⊖ k} + q_Z^j − 1) / d`; negative entries are kept.
pub fn lambda_from_q(ctx: &FieldCtx, stats: &ErrorStats) -> LambdaMatrix {
    let d = ctx.order();
    LambdaMatrix::from_fn(d, |j, k| {
        let phase: f64 = (0..d)
            .map(|s| stats.q_phase[s][ctx.sub(ctx.mul(s, j), k)])
            .sum();
        (phase + stats.q_z[j] - 1.0) / d as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    FullLambda,
    AverageErrorBound,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Entries clamped to zero before renormalization.
    pub clamped: Vec<(usize, usize, f64)>,
    /// Negative entries of the estimated λ (bound mode fallback).
    pub negative: Vec<(usize, usize, f64)>,
    pub lambda00: Option<f64>,
    pub e_bar: Option<f64>,
    /// Which bases the average symbol error is taken over.
    pub e_bar_convention: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Not available in bound mode.
    pub i_ab: Option<f64>,
    pub chi_ae: Option<f64>,
    pub r_inf: f64,
    pub mode: RateMode,
    pub diagnostics: Diagnostics,
}

/// `r∞ = log₂d − H_{d²}(λ)` with the Holevo-bound decomposition.
pub fn key_rate_full(lambda: &LambdaMatrix) -> Result<RateReport, SecurityError> {
    let negative = lambda.negative_entries();
    if !negative.is_empty() {
        return Err(SecurityError::Unphysical(negative));
    }
    let sum = lambda.sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(SecurityError::NotNormalized("λ", sum));
    }
    let clamped: Vec<(usize, usize, f64)> = lambda.entries().filter(|e| e.2 < 0.0).collect();
    let mut values: Vec<f64> = lambda.values.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|x| *x /= total);

    let d = lambda.d;
    let log_d = (d as f64).log2();
    let q_z: Vec<f64> = (0..d)
        .map(|t| values[t * d..(t + 1) * d].iter().sum())
        .collect();
    let h_lambda = entropy(&values);
    let h_z = entropy(&q_z);
    Ok(RateReport {
        i_ab: Some(log_d - h_z),
        chi_ae: Some(h_lambda - h_z),
        r_inf: log_d - h_lambda,
        mode: RateMode::FullLambda,
        diagnostics: Diagnostics {
            clamped,
            lambda00: Some(values[0]),
            ..Diagnostics::default()
        },
    })
}

/// Upper bound on `H_{d²}(λ)` given only `λ₀₀`: uniform tail over `d² − 1` entries.
pub fn entropy_bound(d: usize, lambda00: f64) -> f64 {
    let tail = 1.0 - lambda00;
    let mut h = 0.0;
    if lambda00 > 0.0 {
        h -= lambda00 * lambda00.log2();
    }
    if tail > 0.0 {
        h -= tail * (tail / (d * d - 1) as f64).log2();
    }
    h
}

/// `r ≥ log₂d + λ₀₀log₂λ₀₀ + (1−λ₀₀)log₂((1−λ₀₀)/(d²−1))`.
pub fn key_rate_from_lambda00(d: usize, lambda00: f64) -> Result<RateReport, SecurityError> {
    if !(0.0..=1.0).contains(&lambda00) {
        return Err(SecurityError::OutOfRange {
            name: "λ00",
            value: lambda00,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(RateReport {
        i_ab: None,
        chi_ae: None,
        r_inf: (d as f64).log2() - entropy_bound(d, lambda00),
        mode: RateMode::AverageErrorBound,
        diagnostics: Diagnostics {
            lambda00: Some(lambda00),
            e_bar: Some(d as f64 / (d + 1) as f64 * (1.0 - lambda00)),
            e_bar_convention: Some(format!("average over all {} bases", d + 1)),
            ..Diagnostics::default()
        },
    })
}

/// Conservative rate from the symbol error averaged over all `d + 1` bases.
pub fn key_rate_avg_bound(d: usize, e_bar: f64) -> Result<RateReport, SecurityError> {
    let max = d as f64 / (d + 1) as f64;
    // Sampled or summed errors can overshoot the range edges by rounding.
    if !(-CLAMP_TOL..=max + CLAMP_TOL).contains(&e_bar) {
        return Err(SecurityError::OutOfRange {
            name: "ē",
            value: e_bar,
            min: 0.0,
            max,
        });
    }
    let lambda00 = (1.0 - e_bar.clamp(0.0, max) / max).clamp(0.0, 1.0);
    let mut report = key_rate_from_lambda00(d, lambda00)?;
    report.diagnostics.e_bar = Some(e_bar);
    Ok(report)
}

/// Bound-mode rate for measured error statistics; λ negatives are reported, not repaired.
pub fn key_rate_bound_from_stats(
    ctx: &FieldCtx,
    stats: &ErrorStats,
) -> Result<RateReport, SecurityError> {
    let mut report = key_rate_avg_bound(ctx.order(), stats.average_error())?;
    report.diagnostics.negative = lambda_from_q(ctx, stats).negative_entries();
    Ok(report)
}

/// `log₂d − H_d(q_Z) − H_d(q_0)`.
pub fn rate_two_basis(q_z: &[f64], q_0: &[f64]) -> f64 {
    (q_z.len() as f64).log2() - entropy(q_z) - entropy(q_0)
}

/// Error vector with `1 − e` at zero and `e` spread evenly over the rest.
pub fn symmetric_errors(d: usize, e: f64) -> Vec<f64> {
    let mut q = vec![e / (d - 1) as f64; d];
    q[0] = 1.0 - e;
    q
}

/// Two-basis rate with symmetric errors `ē` in both bases.
pub fn rate_two_basis_symmetric(d: usize, e_bar: f64) -> f64 {
    let q = symmetric_errors(d, e_bar);
    rate_two_basis(&q, &q)
}

/// (d+1)-basis rate under correlated shift noise, in terms of the all-basis average `ē`.
pub fn rate_correlated(d: usize, e_bar: f64) -> f64 {
    let e_z = (d + 1) as f64 / d as f64 * e_bar;
    (d as f64).log2() - entropy(&symmetric_errors(d, e_z))
}

/// Smallest `ē` at which `rate_fn` crosses zero, by bisection to 1e-6.
pub fn threshold(d: usize, rate_fn: impl Fn(f64) -> f64) -> Result<f64, SecurityError> {
    let mut lo = 1e-9;
    let mut hi = d as f64 / (d + 1) as f64 - 1e-9;
    let (f_lo, f_hi) = (rate_fn(lo), rate_fn(hi));
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(SecurityError::NoThreshold);
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if rate_fn(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Threshold of the average-error bound.
pub fn threshold_avg_bound(d: usize) -> Result<f64, SecurityError> {
    threshold(d, |e| {
        key_rate_avg_bound(d, e).map_or(f64::NAN, |r| r.r_inf)
    })
}

/// Threshold of the two-basis protocol with symmetric errors.
pub fn threshold_two_basis(d: usize) -> Result<f64, SecurityError> {
    threshold(d, |e| rate_two_basis_symmetric(d, e))
}

/// Strongly correlated shift noise: only `λ_ii` non-zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedModel {
    pub e_z: f64,
    pub lambda: LambdaMatrix,
    pub stats: ErrorStats,
    /// Average over all `d + 1` bases, `d·e_Z/(d+1)`.
    pub e_bar: f64,
    pub r_two_basis: f64,
    pub r_d_plus_1: f64,
}

pub fn correlated_lambda(d: usize, e_z: f64) -> LambdaMatrix {
    LambdaMatrix::from_fn(d, |j, k| match (j, k) {
        (0, 0) => 1.0 - e_z,
        (j, k) if j == k => e_z / (d - 1) as f64,
        _ => 0.0,
    })
}

pub fn correlated_model(ctx: &FieldCtx, e_z: f64) -> Result<CorrelatedModel, SecurityError> {
    if !(0.0..1.0).contains(&e_z) {
        return Err(SecurityError::OutOfRange {
            name: "e_Z",
            value: e_z,
            min: 0.0,
            max: 1.0,
        });
    }
    let d = ctx.order();
    let lambda = correlated_lambda(d, e_z);
    let stats = q_from_lambda(ctx, &lambda);
    let r_two_basis = rate_two_basis(&stats.q_z, &stats.q_phase[0]);
    let r_d_plus_1 = key_rate_full(&lambda)?.r_inf;
    Ok(CorrelatedModel {
        e_z,
        e_bar: stats.average_error(),
        lambda,
        stats,
        r_two_basis,
        r_d_plus_1,
    })
}

/// Bell-diagonal estimate from a 4-dimensional time-bin experiment
/// (rows `j`, columns `k`); six entries are negative.
pub const EXPERIMENTAL_LAMBDA_D4: [[f64; 4]; 4] = [
    [0.9606, 0.0084, 0.0159, 0.0091],
    [0.0052, -0.0039, 0.0049, -0.0040],
    [0.0047, 0.0046, -0.0053, -0.0022],
    [0.0063, -0.0029, -0.0047, 0.0033],
];

pub fn experimental_lambda_d4() -> LambdaMatrix {
    LambdaMatrix::from_fn(4, |j, k| EXPERIMENTAL_LAMBDA_D4[j][k])
}

/// One point of the rate-versus-error comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub e_bar: f64,
    pub r_two_basis: f64,
    pub r_d_plus_1_bound: f64,
    pub r_d_plus_1_correlated: f64,
}

/// Rates on `points` evenly spaced `ē` in `[0, e_max]`.
pub fn sweep(d: usize, e_max: f64, points: usize) -> Result<Vec<SweepRow>, SecurityError> {
    let limit = d as f64 / (d + 1) as f64;
    if !(0.0..limit).contains(&e_max) {
        return Err(SecurityError::OutOfRange {
            name: "ē max",
            value: e_max,
            min: 0.0,
            max: limit,
        });
    }
    (0..points)
        .map(|i| {
            let e_bar = if points > 1 {
                e_max * i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            Ok(SweepRow {
                d,
                e_bar,
                r_two_basis: rate_two_basis_symmetric(d, e_bar),
                r_d_plus_1_bound: key_rate_avg_bound(d, e_bar)?.r_inf,
                r_d_plus_1_correlated: rate_correlated(d, e_bar),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: usize, n: usize) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_basics() {
        assert!(close(entropy(&[0.25; 4]), 2.0, 1e-15));
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
        assert!(close(entropy(&[1.0 / 16.0; 16]), 4.0, 1e-14));
    }

    #[test]
    fn noiseless_and_uniform() {
        for ctx in [gf(2, 2), gf(3, 1)] {
            let d = ctx.order();
            let point = LambdaMatrix::from_fn(d, |j, k| f64::from(j == 0 && k == 0));
            let stats = q_from_lambda(&ctx, &point);
            let mut unit = vec![0.0; d];
            unit[0] = 1.0;
            assert_eq!(stats.q_z, unit);
            assert!(stats.q_phase.iter().all(|q| *q == unit));
            assert_eq!(lambda_from_q(&ctx, &stats), point);
            assert!(close(
                key_rate_full(&point).unwrap().r_inf,
                (d as f64).log2(),
                1e-15
            ));

            let uniform = LambdaMatrix::from_fn(d, |_, _| 1.0 / (d * d) as f64);
            let stats = q_from_lambda(&ctx, &uniform);
            assert!(stats
                .q_phase
                .iter()
                .flatten()
                .all(|&x| close(x, 1.0 / d as f64, 1e-15)));
            let back = lambda_from_q(&ctx, &stats);
            assert!(back
                .values
                .iter()
                .all(|&x| close(x, 1.0 / (d * d) as f64, 1e-15)));
            let report = key_rate_full(&uniform).unwrap();
            assert!(close(report.r_inf, -(d as f64).log2(), 1e-12));
            assert!(close(
                report.i_ab.unwrap() - report.chi_ae.unwrap(),
                report.r_inf,
                1e-12
            ));
        }
    }

    #[test]
    fn correlated_noise_errors() {
        let ctx = gf(2, 2);
        let e_z = 0.12;
        let model = correlated_model(&ctx, e_z).unwrap();
        assert!(close(model.lambda.get(0, 0), 1.0 - e_z, 1e-15));
        for i in 1..4 {
            assert!(close(model.lambda.get(i, i), e_z / 3.0, 1e-15));
        }
        assert_eq!(model.stats.q_phase[1], vec![1.0, 0.0, 0.0, 0.0]);
        for r in [0, 2, 3] {
            assert!(close(model.stats.e_phase(r), e_z, 1e-15));
        }
        assert!(close(model.e_bar, 4.0 / 5.0 * e_z, 1e-15));
        let e_bar = model.e_bar;
        assert!(close(model.r_d_plus_1, rate_correlated(4, e_bar), 1e-12));
        // Two-basis closed form, written out.
        let two = 2.0 + 2.0 * ((1.0 - e_z) * (1.0 - e_z).log2() + e_z * (e_z / 3.0).log2());
        assert!(close(model.r_two_basis, two, 1e-12));

        let zero = correlated_model(&ctx, 0.0).unwrap();
        assert_eq!((zero.r_two_basis, zero.r_d_plus_1), (2.0, 2.0));
        assert!(correlated_model(&ctx, 1.0).is_err());
    }

    #[test]
    fn correlated_rate_matches_closed_form() {
        let d = 4.0f64;
        for e_bar in [0.01, 0.1, 0.3] {
            let x = (d + 1.0) / d * e_bar;
            let closed = d.log2()
                + (1.0 - x) * (1.0 - x).log2()
                + x * ((d + 1.0) / (d * (d - 1.0)) * e_bar).log2();
            assert!(close(rate_correlated(4, e_bar), closed, 1e-12));
        }
    }

    #[test]
    fn average_bound_examples() {
        let r = key_rate_from_lambda00(4, 0.96).unwrap().r_inf;
        assert!(close(r, 1.601432, 1e-6), "{r}");
        assert_eq!(key_rate_avg_bound(4, 0.0).unwrap().r_inf, 2.0);
        assert!(key_rate_avg_bound(4, 0.038).unwrap().r_inf > 0.0);
        assert!(key_rate_avg_bound(4, 0.9).is_err());
        assert!(key_rate_avg_bound(4, -0.1).is_err());
    }

    #[test]
    fn thresholds() {
        assert!(close(threshold_avg_bound(4).unwrap(), 0.2317, 1e-4));
        assert!(close(threshold_avg_bound(2).unwrap(), 0.126, 1e-3));
        assert!(close(threshold_two_basis(2).unwrap(), 0.110, 1e-3));
        assert_eq!(threshold(4, |_| 1.0), Err(SecurityError::NoThreshold));
    }

    #[test]
    fn experimental_lambda() {
        let ctx = gf(2, 2);
        let lambda = experimental_lambda_d4();
        assert!(close(lambda.sum(), 1.0, 1e-12));
        let stats = q_from_lambda(&ctx, &lambda);
        let back = lambda_from_q(&ctx, &stats);
        assert!(close(back.get(0, 0), 0.9606, 1e-12));
        assert!(close(back.get(1, 1), -0.0039, 1e-12));
        assert!(!back.is_physical());
        assert_eq!(back.negative_entries().len(), 6);
        match key_rate_full(&back) {
            Err(SecurityError::Unphysical(entries)) => assert_eq!(entries.len(), 6),
            other => panic!("{other:?}"),
        }
        let bound = key_rate_bound_from_stats(&ctx, &stats).unwrap();
        assert_eq!(bound.diagnostics.negative.len(), 6);
        assert!(bound.r_inf > 1.6);
    }

    #[test]
    fn tiny_negatives_are_clamped() {
        let mut values = vec![0.0; 16];
        values[0] = 0.9 + 1e-10;
        values[5] = 0.1;
        values[6] = -1e-10;
        let report = key_rate_full(&LambdaMatrix::new(4, values).unwrap()).unwrap();
        assert_eq!(report.diagnostics.clamped, vec![(1, 2, -1e-10)]);
    }

    #[test]
    fn sweep_orderings() {
        for d in [2, 4] {
            let rows = sweep(d, 0.3, 61).unwrap();
            assert_eq!(rows[0].r_two_basis, (d as f64).log2());
            assert_eq!(rows[0].r_d_plus_1_bound, (d as f64).log2());
            for row in &rows {
                assert!(row.r_d_plus_1_correlated >= row.r_d_plus_1_bound - 1e-12);
                assert!(row.r_d_plus_1_bound >= row.r_two_basis - 1e-12);
            }
        }
    }
}
