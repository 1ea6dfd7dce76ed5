//! Durt-form bases and their label permutation onto the Wootters–Fields bases.

use num_complex::Complex64;
use serde::Serialize;

use super::{check_index, MubError, MubFamily, Roots};
use crate::galois::FieldCtx;
use crate::matrix::ComplexMatrix;

/// `γ^e` for a field element `e`, with `γ = -1` (p = 2) or `e^{2πi/p}`.
///
/// The exponent is the integer label of `e`; only its residue mod p matters.
pub fn gamma_pow(ctx: &FieldCtx, e: usize) -> Complex64 {
    gamma_roots(ctx).get(e as i64)
}

fn gamma_roots(ctx: &FieldCtx) -> Roots {
    Roots::new(ctx.p())
}

/// Exponent of `α_i^r` in units of the field's Wootters–Fields root order
/// (quarter turns for p = 2, `2π/p` for odd p).
fn alpha_exponent(ctx: &FieldCtx, r: usize, i: usize) -> i64 {
    if ctx.p() == 2 {
        // α_i^r = Π_{m,n} i^{r ⊙ (i_m 2^m) ⊙ (i_n 2^n)}, labels used as integer exponents.
        let set: Vec<usize> = ctx
            .digits(i)
            .iter()
            .enumerate()
            .filter(|(_, &bit)| bit == 1)
            .map(|(m, _)| 1 << m)
            .collect();
        let mut e = 0i64;
        for &x in &set {
            let rx = ctx.mul(r, x);
            for &y in &set {
                e += ctx.mul(rx, y) as i64;
            }
        }
        e
    } else {
        // α_i^r = γ^{⊖(r ⊙ i ⊙ i) ⊘ 2}
        let half = ctx
            .inv(ctx.two())
            .expect("2 is invertible in odd characteristic");
        let e = ctx.mul(ctx.neg(ctx.mul(ctx.mul(r, i), i)), half);
        e as i64
    }
}

pub fn alpha(ctx: &FieldCtx, r: usize, i: usize) -> Complex64 {
    Roots::for_field(ctx).get(alpha_exponent(ctx, r, i))
}

/// Durt-form phase basis, `H^(r)_ij = (α^r_{⊖i})* γ^{⊖i⊙j} / √d`.
pub fn build_durt_basis(ctx: &FieldCtx, r: usize) -> Result<ComplexMatrix, MubError> {
    check_index(ctx, r)?;
    let d = ctx.order();
    let roots = Roots::for_field(ctx);
    // γ expressed in the Wootters–Fields root order: -1 = i^2 for p = 2.
    let gamma_scale = if ctx.p() == 2 { 2 } else { 1 };
    let norm = 1.0 / (d as f64).sqrt();
    let alpha_conj: Vec<i64> = (0..d)
        .map(|i| -alpha_exponent(ctx, r, ctx.neg(i)))
        .collect();
    Ok(ComplexMatrix::from_fn(d, |i, j| {
        let g = gamma_scale * ctx.mul(ctx.neg(i), j) as i64;
        roots.get(alpha_conj[i] + g) * norm
    }))
}

/// Label permutation taking Durt-form states onto Wootters–Fields states:
/// `H^(r)_ij = B^(r')_{i j'}` with `r' = basis_perm[r]`, `j' = state_perm[r][j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceMap {
    pub basis_perm: Vec<usize>,
    pub state_perm: Vec<Vec<usize>>,
    /// Correction vectors `a` per basis (p = 2 only).
    pub a: Option<Vec<usize>>,
    /// Correction vectors `b` per basis (p = 2 only).
    pub b: Option<Vec<usize>>,
}

impl EquivalenceMap {
    pub fn is_bijective(&self) -> bool {
        let d = self.basis_perm.len();
        let perm = |v: &[usize]| {
            let mut seen = vec![false; d];
            v.iter()
                .all(|&x| x < d && !std::mem::replace(&mut seen[x], true))
        };
        perm(&self.basis_perm) && self.state_perm.iter().all(|p| perm(p))
    }

    /// Inverse of `state_perm[r]`: Wootters–Fields index → Durt index.
    pub fn inverse_state_perm(&self, r: usize) -> Vec<usize> {
        let mut inv = vec![0; self.state_perm[r].len()];
        for (j, &jp) in self.state_perm[r].iter().enumerate() {
            inv[jp] = j;
        }
        inv
    }

    /// `max |H^(r)_ij - B^(r')_{ij'}|` over all phase bases and entries.
    pub fn max_deviation(&self, durt: &MubFamily, wf: &MubFamily) -> f64 {
        let d = self.basis_perm.len();
        let mut worst = 0.0f64;
        for r in 0..d {
            let h = &durt.bases[r];
            let b = &wf.bases[self.basis_perm[r]];
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max((h[(i, j)] - b[(i, self.state_perm[r][j])]).norm());
                }
            }
        }
        worst
    }
}

/// Builds the Durt → Wootters–Fields relabeling for `ctx`.
pub fn equivalence_map(ctx: &FieldCtx) -> EquivalenceMap {
    let d = ctx.order();
    let n = ctx.degree();
    let a_mat = ctx.structure_matrices();
    let f0 = |x: usize| ctx.from_digits(&a_mat.apply(0, &ctx.digits(x)));

    if ctx.p() == 2 {
        let mut basis_perm = Vec::with_capacity(d);
        let mut state_perm = Vec::with_capacity(d);
        let mut a_vecs = Vec::with_capacity(d);
        let mut b_vecs = Vec::with_capacity(d);
        for r in 0..d {
            let r_digits = ctx.digits(r);
            let r_prime = f0(r);
            let rp_digits = ctx.digits(r_prime);
            // a_n = Σ_{k,l} r_k A^(1)_kl A^(l)_nn mod 2; absent when N = 1.
            let a_digits: Vec<usize> = (0..n)
                .map(|nn| {
                    if n < 2 {
                        return 0;
                    }
                    let mut s = 0;
                    for (k, &rk) in r_digits.iter().enumerate() {
                        for l in 0..n {
                            s += rk * a_mat.get(1, k, l) * a_mat.get(l, nn, nn);
                        }
                    }
                    s % 2
                })
                .collect();
            // b_n = 1 iff Σ_k r'_k A^(k)_nn ∈ {1, 2} mod 4
            let b_digits: Vec<usize> = (0..n)
                .map(|nn| {
                    let s: usize = (0..n).map(|k| rp_digits[k] * a_mat.get(k, nn, nn)).sum();
                    usize::from(matches!(s % 4, 1 | 2))
                })
                .collect();
            let a = ctx.from_digits(&a_digits);
            let b = ctx.from_digits(&b_digits);
            basis_perm.push(r_prime);
            state_perm.push((0..d).map(|j| ctx.add(ctx.add(f0(j), a), b)).collect());
            a_vecs.push(a);
            b_vecs.push(b);
        }
        EquivalenceMap {
            basis_perm,
            state_perm,
            a: Some(a_vecs),
            b: Some(b_vecs),
        }
    } else {
        let half = ctx
            .inv(ctx.two())
            .expect("2 is invertible in odd characteristic");
        let states: Vec<usize> = (0..d).map(|j| f0(ctx.neg(j))).collect();
        EquivalenceMap {
            basis_perm: (0..d).map(|r| f0(ctx.mul(r, half))).collect(),
            state_perm: vec![states; d],
            a: None,
            b: None,
        }
    }
}
