//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! Run with `cargo test -p mubkit --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mubkit::galois::FieldCtx;
use mubkit::matrix::ComplexMatrix;
use mubkit::mub::{
    build_diag, build_durt_basis, build_fourier, build_wf_basis, equivalence_map, phase_alphabet,
    verify_mub, weyl, weyl_shift_laws_check, Basis, MubFamily,
};
use mubkit::optics::{extract_povm, NetworkLayout, SwitchMode, Topology};
use mubkit::protocol::{run_protocol, Backend, ChannelModel, RunConfig, TallyMatrix};
use mubkit::security::{
    correlated_model, entropy, key_rate_avg_bound, key_rate_bound_from_stats,
    key_rate_from_lambda00, key_rate_full, lambda_from_q, q_from_lambda, rate_correlated,
    rate_two_basis_symmetric, threshold_avg_bound, threshold_two_basis, ErrorStats, LambdaMatrix,
    SecurityError, EXPERIMENTAL_LAMBDA_D4,
};

const MUB_DIMS: [usize; 9] = [2, 3, 4, 5, 7, 8, 9, 16, 27];

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn field(d: usize) -> FieldCtx {
    FieldCtx::from_order(d).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e^{2πi mn/p}/√p` evaluated directly.
fn dft(p: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(p, |m, n| {
        Complex64::from_polar(
            1.0 / (p as f64).sqrt(),
            2.0 * PI * (m * n) as f64 / p as f64,
        )
    })
}

fn tensor_power(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (1..n).fold(m.clone(), |acc, _| acc.kron(m))
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for d in MUB_DIMS {
        let ctx = field(d);
        for family in [MubFamily::wootters_fields(&ctx), MubFamily::durt(&ctx)] {
            let report = verify_mub(&family);
            worst = worst
                .max(report.worst_pair_deviation)
                .max(report.worst_unitarity_deviation);
            if !report.ok || report.basis_count != d + 1 {
                bad.push(format!("d={d} {:?}", family.construction));
            }
        }
    }
    check(
        bad.is_empty() && worst <= 1e-10,
        format!("worst deviation {worst:.2e}, failures {bad:?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst_decomp = 0.0f64;
    let mut worst_b0 = 0.0f64;
    for d in MUB_DIMS {
        let ctx = field(d);
        let b0 = build_wf_basis(&ctx, 0).unwrap();
        for r in 0..d {
            let product = &build_diag(&ctx, r).unwrap() * &b0;
            worst_decomp =
                worst_decomp.max(product.max_abs_diff(&build_wf_basis(&ctx, r).unwrap()));
        }
        let expected = tensor_power(&dft(ctx.p()), ctx.degree());
        worst_b0 = worst_b0.max(b0.max_abs_diff(&expected));
    }
    check(
        worst_decomp <= 1e-12 && worst_b0 <= 1e-12,
        format!("B=DB0 {worst_decomp:.2e}, B0 vs tensor power {worst_b0:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut bijective = true;
    for d in [2, 4, 8, 3, 9] {
        let ctx = field(d);
        let map = equivalence_map(&ctx);
        bijective &= map.is_bijective();
        for r in 0..d {
            let h = build_durt_basis(&ctx, r).unwrap();
            let b = build_wf_basis(&ctx, map.basis_perm[r]).unwrap();
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max((h[(i, j)] - b[(i, map.state_perm[r][j])]).norm());
                }
            }
        }
    }
    check(
        bijective && worst <= 1e-12,
        format!("worst entry deviation {worst:.2e}, maps bijective {bijective}"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in [2, 3, 4, 5, 7, 8, 9] {
        let ctx = field(d);
        let report = weyl_shift_laws_check(&ctx);
        worst = worst
            .max(report.eigen_deviation)
            .max(report.phase_shift_deviation)
            .max(report.z_shift_deviation)
            .max(report.decomposition_deviation);
        cases += report.cases;
        for i in 0..d {
            for j in 0..d {
                let product = &weyl(&ctx, 0, j) * &weyl(&ctx, i, 0);
                worst = worst.max(product.max_abs_diff(&weyl(&ctx, i, j)));
                worst = worst.max(weyl(&ctx, i, j).unitarity_deviation());
            }
        }
    }
    check(
        worst <= 1e-10,
        format!("worst deviation {worst:.2e} over {cases} shift-law cases"),
    )
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for d in MUB_DIMS {
        let ctx = field(d);
        let limit = if ctx.p() == 2 { 4 } else { ctx.p() };
        let largest = (0..d)
            .map(|r| {
                phase_alphabet(&build_wf_basis(&ctx, r).unwrap())
                    .unwrap()
                    .len()
            })
            .max()
            .unwrap();
        sizes.push(format!("{d}:{largest}"));
        if largest > limit {
            failures.push(format!("WF d={d} uses {largest} phases"));
        }
    }
    for d in [4, 8, 16] {
        let count = phase_alphabet(&build_fourier(d).unwrap()).unwrap().len();
        if count != d {
            failures.push(format!("Fourier d={d} uses {count} phases"));
        }
    }
    check(
        failures.is_empty(),
        format!("WF alphabet sizes {}; {failures:?}", sizes.join(" ")),
    )
}

fn criterion_6() -> Outcome {
    let hadamard = dft(2);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    let mut ok = true;
    for n in 1..=3 {
        let ctx = FieldCtx::new(2, n).unwrap();
        let d = ctx.order();
        let b0 = tensor_power(&hadamard, n);
        let projector = |k: usize| ComplexMatrix::outer(&b0.column(k));
        for topology in [Topology::TimeDivisionMultiplexed, Topology::Tree] {
            let expected_stages = match topology {
                Topology::TimeDivisionMultiplexed => n,
                Topology::Tree => d - 1,
            };
            for mode in [SwitchMode::Passive, SwitchMode::ActiveSwitch] {
                let layout = match NetworkLayout::new(&ctx, topology, mode) {
                    Ok(layout) => layout,
                    Err(e) => {
                        ok = false;
                        notes.push(format!("d={d} {topology:?} {mode:?}: {e}"));
                        continue;
                    }
                };
                ok &= layout.stage_count() == expected_stages;
                let scale = match mode {
                    SwitchMode::Passive => 1.0 / (1 << n) as f64,
                    SwitchMode::ActiveSwitch => 1.0,
                };
                let povm = extract_povm(&layout);
                let mut sum = ComplexMatrix::zeros(d);
                for (k, e) in povm.iter().enumerate() {
                    worst = worst.max(e.max_abs_diff(&projector(k).scale(c(scale, 0.0))));
                    sum = sum.add(e);
                }
                if mode == SwitchMode::ActiveSwitch {
                    worst = worst.max(sum.max_abs_diff(&ComplexMatrix::identity(d)));
                } else {
                    let loss = (layout.loss_factor() - scale).abs();
                    if loss > 1e-12 {
                        ok = false;
                        notes.push(format!("d={d} {topology:?} loss off by {loss:.2e}"));
                    }
                }
            }
        }
    }
    check(
        ok && worst <= 1e-10,
        format!("worst POVM deviation {worst:.2e}; stages N (TDM) and d-1 (tree) {notes:?}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let t4 = threshold_avg_bound(4).unwrap();
    let t2 = threshold_avg_bound(2).unwrap();
    let t2_two = threshold_two_basis(2).unwrap();
    let r = key_rate_from_lambda00(4, 0.96).unwrap().r_inf;
    let r_e = key_rate_avg_bound(4, 0.8 * 0.04).unwrap().r_inf;
    let elapsed = start.elapsed();
    // Independent evaluation of the bound at λ00 = 0.96.
    let tail = 0.04 / 15.0;
    let mut lam = vec![tail; 16];
    lam[0] = 0.96;
    let oracle = 2.0 - entropy(&lam);
    check(
        (t4 - 0.2317).abs() <= 1e-4
            && (t2 - 0.126).abs() <= 1e-3
            && (t2_two - 0.110).abs() <= 1e-3
            && r >= 1.60
            && (r - 1.601).abs() <= 2e-3
            && (r - oracle).abs() < 1e-12
            && (r_e - r).abs() < 1e-12
            && elapsed < Duration::from_secs(1),
        format!(
            "thresholds d4 {t4:.6}, d2 {t2:.6}, d2 two-basis {t2_two:.6}; r(λ00=0.96) {r:.6}; {elapsed:.2?}"
        ),
    )
}

fn random_lambda(rng: &mut ChaCha8Rng, d: usize) -> LambdaMatrix {
    // Mix of dense and sparse draws so boundary cases are covered.
    let sparse = rng.random_bool(0.3);
    let mut raw: Vec<f64> = (0..d * d)
        .map(|_| {
            if sparse && rng.random_bool(0.7) {
                0.0
            } else {
                -rng.random::<f64>().max(1e-300).ln()
            }
        })
        .collect();
    let anchor = rng.random_range(0..d * d);
    raw[anchor] += 1.0;
    let total: f64 = raw.iter().sum();
    LambdaMatrix::new(d, raw.iter().map(|x| x / total).collect()).unwrap()
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for d in [2, 3, 4, 9] {
        let ctx = field(d);
        for _ in 0..100 {
            let lambda = random_lambda(&mut rng, d);
            let back = lambda_from_q(&ctx, &q_from_lambda(&ctx, &lambda));
            for (a, b) in back.values.iter().zip(&lambda.values) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("worst reconstruction error {worst:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2, 4] {
        let ctx = field(d);
        for e_z in [0.0, 0.05, 0.1, 0.3] {
            let model = correlated_model(&ctx, e_z).unwrap();
            for r in 0..d {
                let e = model.stats.e_phase(r);
                let good = if r == 1 {
                    e == 0.0
                } else {
                    // 1 − (1 − e_Z) is e_Z up to the rounding of that subtraction.
                    (e - e_z).abs() <= 4.0 * f64::EPSILON
                };
                if !good {
                    ok = false;
                    notes.push(format!("d={d} e_Z={e_z} r={r}: {e}"));
                }
            }
        }
        let mut min_gap = f64::INFINITY;
        for i in 0..100 {
            let e_bar = 0.3 * i as f64 / 99.0;
            let cor = rate_correlated(d, e_bar);
            let two = rate_two_basis_symmetric(d, e_bar);
            min_gap = min_gap.min(cor - two);
        }
        let log_d = (d as f64).log2();
        let at_zero = (rate_correlated(d, 0.0) - log_d).abs()
            + (rate_two_basis_symmetric(d, 0.0) - log_d).abs();
        ok &= min_gap >= 0.0 && at_zero == 0.0;
        notes.push(format!("d={d} min(r_cor - r_two) {min_gap:.3e}"));
    }
    check(ok, notes.join("; "))
}

struct Sampled {
    q: Vec<Vec<f64>>,
    n: Vec<u64>,
}

/// Matched-basis error vectors of a tally, Z first then the phase bases.
fn sampled(ctx: &FieldCtx, tally: &TallyMatrix) -> Sampled {
    let d = ctx.order();
    let mut q = Vec::new();
    let mut n = Vec::new();
    for basis in std::iter::once(Basis::Z).chain((0..d).map(Basis::Phase)) {
        let mut counts = vec![0u64; d];
        for a in 0..d {
            for b in 0..d {
                counts[ctx.sub(a, b)] += tally.count(basis, a, basis, b);
            }
        }
        let total: u64 = counts.iter().sum();
        n.push(total);
        q.push(counts.iter().map(|&k| k as f64 / total as f64).collect());
    }
    Sampled { q, n }
}

fn analytic(stats: &ErrorStats) -> Vec<Vec<f64>> {
    std::iter::once(stats.q_z.clone())
        .chain(stats.q_phase.iter().cloned())
        .collect()
}

/// Largest `|Δ|/σ`; a non-zero deviation where σ = 0 counts as infinite.
fn worst_sigma(expected: &[Vec<f64>], samples: &[&Sampled]) -> f64 {
    let mut worst = 0.0f64;
    for (r, q) in expected.iter().enumerate() {
        for (t, &p) in q.iter().enumerate() {
            let (delta, var) = match samples {
                [s] => (s.q[r][t] - p, p * (1.0 - p) / s.n[r] as f64),
                [a, b] => (
                    a.q[r][t] - b.q[r][t],
                    p * (1.0 - p) * (1.0 / a.n[r] as f64 + 1.0 / b.n[r] as f64),
                ),
                _ => unreachable!(),
            };
            let z = if var > 0.0 {
                delta.abs() / var.sqrt()
            } else if delta == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    worst
}

fn criterion_10() -> Outcome {
    const TRIALS: u64 = 1_000_000;
    let ctx = field(4);
    let mut ok = true;
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut timed = |config: &RunConfig, channel: &ChannelModel| {
        let start = Instant::now();
        let tally = run_protocol(config, channel).unwrap();
        slowest = slowest.max(start.elapsed());
        tally
    };

    let channels = [
        ("identity", ChannelModel::Identity),
        (
            "depolarizing",
            ChannelModel::depolarizing_for_error(4, 0.05),
        ),
        ("correlated", ChannelModel::CorrelatedShift(0.1)),
    ];
    for (seed, (name, channel)) in channels.iter().enumerate() {
        let expected = analytic(&q_from_lambda(&ctx, &channel.weights(&ctx).unwrap()));
        let config = RunConfig::uniform(&ctx, TRIALS, 100 + seed as u64);
        let ideal = sampled(&ctx, &timed(&config, channel));
        let z = worst_sigma(&expected, &[&ideal]);
        ok &= z <= 3.0;
        notes.push(format!("{name} {z:.2}σ"));
    }

    let channel = ChannelModel::depolarizing_for_error(4, 0.05);
    let expected = analytic(&q_from_lambda(&ctx, &channel.weights(&ctx).unwrap()));
    let ideal = sampled(
        &ctx,
        &timed(&RunConfig::uniform(&ctx, TRIALS, 200), &channel),
    );
    for (topology, mode) in [
        (Topology::TimeDivisionMultiplexed, SwitchMode::Passive),
        (Topology::Tree, SwitchMode::ActiveSwitch),
    ] {
        let mut config = RunConfig::uniform(&ctx, TRIALS, 201);
        config.backend = Backend::Optics {
            topology,
            switch_mode: mode,
        };
        let optics = sampled(&ctx, &timed(&config, &channel));
        let z = worst_sigma(&expected, &[&optics, &ideal]);
        ok &= z <= 3.0;
        notes.push(format!("optics {topology:?}/{mode:?} vs ideal {z:.2}σ"));
    }

    let mut one = RunConfig::uniform(&ctx, TRIALS, 300);
    one.threads = Some(1);
    let mut many = one.clone();
    many.threads = Some(8);
    let channel = ChannelModel::CorrelatedShift(0.1);
    let identical = timed(&one, &channel) == timed(&many, &channel);
    ok &= identical;
    notes.push(format!("1 vs 8 threads identical {identical}"));

    ok &= slowest < Duration::from_secs(60);
    notes.push(format!("slowest run {slowest:.2?}"));
    check(ok, notes.join("; "))
}

fn criterion_11() -> Outcome {
    let ctx = field(4);
    let csv: String = EXPERIMENTAL_LAMBDA_D4
        .iter()
        .map(|row| row.map(|x| x.to_string()).join(",") + "\n")
        .collect();
    let lambda = mubkit::export::read_lambda_csv(csv.as_bytes()).unwrap();
    let table_negatives: Vec<(usize, usize)> = (0..4)
        .flat_map(|j| (0..4).map(move |k| (j, k)))
        .filter(|&(j, k)| EXPERIMENTAL_LAMBDA_D4[j][k] < 0.0)
        .collect();
    let flagged: Vec<(usize, usize)> = match key_rate_full(&lambda) {
        Err(SecurityError::Unphysical(entries)) => {
            entries.iter().map(|&(j, k, _)| (j, k)).collect()
        }
        _ => Vec::new(),
    };
    let stats = q_from_lambda(&ctx, &lambda);
    let bound = key_rate_bound_from_stats(&ctx, &stats).unwrap();
    let lambda00 = lambda.get(0, 0);
    let implied = bound.diagnostics.lambda00.unwrap();
    check(
        lambda00 == 0.9606
            && (implied - 0.9606).abs() < 1e-12
            && flagged == table_negatives
            && bound.r_inf >= 1.6,
        format!(
            "λ00 {lambda00}, flagged {} negative entries {flagged:?} (table has {}), bound rate {:.4}",
            flagged.len(),
            table_negatives.len(),
            bound.r_inf
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("MUB correctness", criterion_1),
        ("phase-basis decomposition", criterion_2),
        ("construction equivalence", criterion_3),
        ("Weyl algebra", criterion_4),
        ("phase-alphabet scaling", criterion_5),
        ("optics POVM", criterion_6),
        ("key-rate numbers", criterion_7),
        ("lambda/q round trip", criterion_8),
        ("correlated-noise model", criterion_9),
        ("Monte-Carlo consistency", criterion_10),
        ("experimental lambda import", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let limit = match i + 1 {
            1 => Some(Duration::from_secs(10)),
            _ => None,
        };
        let elapsed = start.elapsed();
        let ok = outcome.ok && limit.is_none_or(|l| elapsed < l);
        failed += usize::from(!ok);
        println!(
            "{} criterion {}: {name}: {} [{elapsed:.2?}]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
