//! Weyl operators over GF(p^N) and the generalized Bell basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{alpha, gamma_pow, MubFamily, ANALYTIC_TOL};
use crate::galois::FieldCtx;
use crate::matrix::ComplexMatrix;

/// `V_ij = Σ_k γ^{(k⊕i)⊙j} |k⊕i⟩⟨k|`.
pub fn weyl(ctx: &FieldCtx, i: usize, j: usize) -> ComplexMatrix {
    let d = ctx.order();
    let mut v = ComplexMatrix::zeros(d);
    for k in 0..d {
        let row = ctx.add(k, i);
        v[(row, k)] = gamma_pow(ctx, ctx.mul(row, j));
    }
    v
}

/// `V_ij |ψ⟩` without materializing the matrix.
pub fn weyl_apply(ctx: &FieldCtx, i: usize, j: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (k, &amp) in psi.iter().enumerate() {
        let row = ctx.add(k, i);
        out[row] = gamma_pow(ctx, ctx.mul(row, j)) * amp;
    }
    out
}

/// `V_ij† |ψ⟩`.
pub fn weyl_adjoint_apply(ctx: &FieldCtx, i: usize, j: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (k, slot) in out.iter_mut().enumerate() {
        let row = ctx.add(k, i);
        *slot = gamma_pow(ctx, ctx.mul(row, j)).conj() * psi[row];
    }
    out
}

/// `|Φ_ij⟩ = (V_ij ⊗ I)|Φ_00⟩`, indexed `a·d + b` for `|a⟩|b⟩`.
pub fn bell_state(ctx: &FieldCtx, i: usize, j: usize) -> Vec<Complex64> {
    let d = ctx.order();
    let norm = 1.0 / (d as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for s in 0..d {
        let a = ctx.add(s, i);
        out[a * d + s] = gamma_pow(ctx, ctx.mul(a, j)) * norm;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub ok: bool,
    /// Eigenvector relation `V_{l, r⊙l} |e_k^(r)⟩ ∝ |e_k^(r)⟩`.
    pub eigen_deviation: f64,
    /// Phase-basis shift law.
    pub phase_shift_deviation: f64,
    /// Computational-basis shift law.
    pub z_shift_deviation: f64,
    /// `V_ij = V_0j V_i0`.
    pub decomposition_deviation: f64,
    pub cases: usize,
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Exhaustively checks the Weyl shift laws against the Durt-form bases.
pub fn weyl_shift_laws_check(ctx: &FieldCtx) -> WeylReport {
    let d = ctx.order();
    let family = MubFamily::durt(ctx);
    let ops: Vec<Vec<ComplexMatrix>> = (0..d)
        .map(|i| (0..d).map(|j| weyl(ctx, i, j)).collect())
        .collect();

    let mut eigen = 0.0f64;
    let mut phase_shift = 0.0f64;
    let mut z_shift = 0.0f64;
    let mut decomposition = 0.0f64;
    let mut cases = 0;

    for r in 0..d {
        let states: Vec<Vec<Complex64>> = (0..d).map(|k| family.state(r, k)).collect();
        for l in 0..d {
            let v = &ops[l][ctx.mul(r, l)];
            for psi in &states {
                let out = v.apply(psi);
                // Rayleigh quotient gives the eigenvalue; residual measures the failure.
                let lambda: Complex64 = psi.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
                let scaled: Vec<Complex64> = psi.iter().map(|a| a * lambda).collect();
                eigen = eigen.max(max_diff(&out, &scaled));
            }
        }
        for i in 0..d {
            let phase = alpha(ctx, r, i).conj();
            for j in 0..d {
                for (k, psi) in states.iter().enumerate() {
                    let out = ops[i][j].apply(psi);
                    let target = ctx.add(ctx.sub(ctx.mul(r, i), j), k);
                    let factor = gamma_pow(ctx, ctx.mul(i, k)) * phase;
                    let expected: Vec<Complex64> =
                        states[target].iter().map(|a| a * factor).collect();
                    phase_shift = phase_shift.max(max_diff(&out, &expected));
                    cases += 1;
                }
            }
        }
    }

    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut basis = vec![Complex64::new(0.0, 0.0); d];
                basis[k] = Complex64::new(1.0, 0.0);
                let out = ops[i][j].apply(&basis);
                let mut expected = vec![Complex64::new(0.0, 0.0); d];
                let target = ctx.add(i, k);
                expected[target] = gamma_pow(ctx, ctx.mul(target, j));
                z_shift = z_shift.max(max_diff(&out, &expected));
            }
            let product = &ops[0][j] * &ops[i][0];
            decomposition = decomposition.max(product.max_abs_diff(&ops[i][j]));
        }
    }

    WeylReport {
        ok: [eigen, phase_shift, z_shift, decomposition]
            .iter()
            .all(|&x| x <= ANALYTIC_TOL),
        eigen_deviation: eigen,
        phase_shift_deviation: phase_shift,
        z_shift_deviation: z_shift,
        decomposition_deviation: decomposition,
        cases,
    }
}
