//! Complete sets of mutually unbiased bases in prime-power dimension.
//!
//! Bases are stored as unitary matrices whose columns are the basis states:
//! entry `(m, n)` is the amplitude of computational state `m` in state `n`.
//! A family holds the `d` phase bases at indices `0..d` followed by the
//! computational (Z) basis at index `d`.

mod durt;
mod weyl;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{FieldCtx, GaloisError, StructureMatrices};
use crate::matrix::ComplexMatrix;

pub use durt::{alpha, build_durt_basis, equivalence_map, gamma_pow, EquivalenceMap};
pub use weyl::{
    bell_state, weyl, weyl_adjoint_apply, weyl_apply, weyl_shift_laws_check, WeylReport,
};

/// Tolerance for properties evaluated through floating trigonometry.
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Tolerance for identities that hold by construction.
pub const CONSTRUCTIVE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MubError {
    #[error("index {index} out of range for dimension {d}")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("matrix has a zero entry at ({0}, {1})")]
    ZeroEntry(usize, usize),
    #[error("matrix entries do not share a common modulus")]
    UnequalModulus,
    #[error("dimension must be at least 2")]
    DimensionTooSmall,
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    WoottersFields,
    Durt,
}

/// A basis of the family: one of the `d` phase bases or the computational basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Phase(usize),
    Z,
}

impl Basis {
    /// Position in a family's basis list (`d` for Z).
    pub fn index(self, d: usize) -> usize {
        match self {
            Basis::Phase(r) => r,
            Basis::Z => d,
        }
    }

    pub fn from_index(index: usize, d: usize) -> Self {
        if index >= d {
            Basis::Z
        } else {
            Basis::Phase(index)
        }
    }

    /// All `d + 1` bases in family order.
    pub fn all(d: usize) -> impl Iterator<Item = Basis> {
        (0..=d).map(move |i| Basis::from_index(i, d))
    }
}

/// Exact roots of unity of a fixed order, looked up by integer exponent.
///
/// For p = 2 the order is 4 (powers of `i`); for odd p it is `p`.
#[derive(Debug, Clone)]
pub(crate) struct Roots {
    order: usize,
    table: Vec<Complex64>,
}

impl Roots {
    pub(crate) fn new(order: usize) -> Self {
        let table = (0..order)
            .map(|k| match (order, k) {
                (4, 0) | (2, 0) => Complex64::new(1.0, 0.0),
                (4, 1) => Complex64::new(0.0, 1.0),
                (4, 2) | (2, 1) => Complex64::new(-1.0, 0.0),
                (4, 3) => Complex64::new(0.0, -1.0),
                _ => Complex64::from_polar(1.0, 2.0 * PI * k as f64 / order as f64),
            })
            .collect();
        Roots { order, table }
    }

    /// Roots used by the Wootters–Fields phases of `ctx`.
    pub(crate) fn for_field(ctx: &FieldCtx) -> Self {
        Self::new(if ctx.p() == 2 { 4 } else { ctx.p() })
    }

    pub(crate) fn get(&self, exponent: i64) -> Complex64 {
        self.table[exponent.rem_euclid(self.order as i64) as usize]
    }
}

fn check_index(ctx: &FieldCtx, index: usize) -> Result<(), MubError> {
    if index < ctx.order() {
        Ok(())
    } else {
        Err(MubError::IndexOutOfRange {
            index,
            d: ctx.order(),
        })
    }
}

/// Exponent of the diagonal phase `D^(r)_mm`, i.e. `Σ_j r_j mᵀA^(j)m`,
/// in units of the field's root order.
fn diag_exponent(ctx: &FieldCtx, a: &StructureMatrices, r_digits: &[usize], m: usize) -> i64 {
    let m_digits = ctx.digits(m);
    r_digits
        .iter()
        .enumerate()
        .filter(|(_, &rj)| rj != 0)
        .map(|(j, &rj)| (rj * a.quadratic_form(j, &m_digits)) as i64)
        .sum()
}

fn dot(a: &[usize], b: &[usize]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x * y) as i64).sum()
}

/// Wootters–Fields phase basis `B^(r)`.
pub fn build_wf_basis(ctx: &FieldCtx, r: usize) -> Result<ComplexMatrix, MubError> {
    check_index(ctx, r)?;
    let a = ctx.structure_matrices();
    let roots = Roots::for_field(ctx);
    // p = 2 uses quarter turns, so the m·n term is doubled.
    let linear = if ctx.p() == 2 { 2 } else { 1 };
    let d = ctx.order();
    let norm = 1.0 / (d as f64).sqrt();
    let r_digits = ctx.digits(r);
    let digits: Vec<Vec<usize>> = (0..d).map(|x| ctx.digits(x)).collect();
    let quad: Vec<i64> = (0..d)
        .map(|m| diag_exponent(ctx, &a, &r_digits, m))
        .collect();
    Ok(ComplexMatrix::from_fn(d, |m, n| {
        roots.get(quad[m] + linear * dot(&digits[m], &digits[n])) * norm
    }))
}

/// Diagonal unitary `D^(r)` with `B^(r) = D^(r) B^(0)`.
pub fn build_diag(ctx: &FieldCtx, r: usize) -> Result<ComplexMatrix, MubError> {
    check_index(ctx, r)?;
    let a = ctx.structure_matrices();
    let roots = Roots::for_field(ctx);
    let r_digits = ctx.digits(r);
    let diag: Vec<Complex64> = (0..ctx.order())
        .map(|m| roots.get(diag_exponent(ctx, &a, &r_digits, m)))
        .collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// The `d`-point discrete Fourier basis, `e^{2πimn/d}/√d`.
pub fn build_fourier(d: usize) -> Result<ComplexMatrix, MubError> {
    if d < 2 {
        return Err(MubError::DimensionTooSmall);
    }
    let norm = 1.0 / (d as f64).sqrt();
    let roots = Roots::new(d);
    Ok(ComplexMatrix::from_fn(d, |m, n| {
        roots.get((m * n) as i64) * norm
    }))
}

/// Distinct phases (in `[0, 2π)`) among the entries of a flat-modulus matrix.
pub fn phase_alphabet(m: &ComplexMatrix) -> Result<Vec<f64>, MubError> {
    const CLUSTER: f64 = 1e-9;
    let d = m.dim();
    let reference = m[(0, 0)].norm();
    let mut phases = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            if z.norm() == 0.0 {
                return Err(MubError::ZeroEntry(i, j));
            }
            if (z.norm() - reference).abs() > 1e-9 * reference.max(1.0) {
                return Err(MubError::UnequalModulus);
            }
            phases.push(z.arg().rem_euclid(2.0 * PI));
        }
    }
    phases.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for phase in phases {
        match distinct.last() {
            Some(&last) if phase - last < CLUSTER => {}
            _ => distinct.push(phase),
        }
    }
    // Phases just below 2π belong to the cluster at 0.
    if distinct.len() > 1 && distinct[0] + 2.0 * PI - distinct[distinct.len() - 1] < CLUSTER {
        distinct.pop();
    }
    Ok(distinct)
}

/// `d + 1` bases: phase bases `0..d`, then the Z basis at index `d`.
#[derive(Debug, Clone)]
pub struct MubFamily {
    pub ctx: FieldCtx,
    pub construction: Construction,
    pub bases: Vec<ComplexMatrix>,
}

impl MubFamily {
    pub fn build(ctx: &FieldCtx, construction: Construction) -> Self {
        let d = ctx.order();
        let mut bases: Vec<ComplexMatrix> = (0..d)
            .into_par_iter()
            .map(|r| match construction {
                Construction::WoottersFields => build_wf_basis(ctx, r),
                Construction::Durt => build_durt_basis(ctx, r),
            })
            .collect::<Result<_, _>>()
            .expect("basis indices are in range");
        bases.push(ComplexMatrix::identity(d));
        MubFamily {
            ctx: ctx.clone(),
            construction,
            bases,
        }
    }

    pub fn wootters_fields(ctx: &FieldCtx) -> Self {
        Self::build(ctx, Construction::WoottersFields)
    }

    pub fn durt(ctx: &FieldCtx) -> Self {
        Self::build(ctx, Construction::Durt)
    }

    pub fn dim(&self) -> usize {
        self.ctx.order()
    }

    /// Index of the computational basis.
    pub fn z_index(&self) -> usize {
        self.dim()
    }

    /// State `n` of basis `r` as a column vector.
    pub fn state(&self, r: usize, n: usize) -> Vec<Complex64> {
        self.bases[r].column(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubReport {
    pub ok: bool,
    pub tolerance: f64,
    /// `max |(B_r† B_s)_ij|² - 1/d|` over distinct pairs.
    pub worst_pair_deviation: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_unitarity_deviation: f64,
    pub worst_unitarity_basis: Option<usize>,
    pub basis_count: usize,
}

fn pair_deviation(a: &ComplexMatrix, b: &ComplexMatrix, target: f64) -> f64 {
    let g = &a.adjoint() * b;
    g.as_slice()
        .iter()
        .map(|z| (z.norm_sqr() - target).abs())
        .fold(0.0, f64::max)
}

/// Checks unitarity of every basis and unbiasedness of every distinct pair.
pub fn verify_bases(bases: &[ComplexMatrix], tolerance: f64) -> MubReport {
    let d = bases.first().map_or(0, |b| b.dim());
    let target = 1.0 / d as f64;
    let (worst_unitarity_deviation, worst_unitarity_basis) = bases
        .par_iter()
        .enumerate()
        .map(|(r, b)| (b.unitarity_deviation(), Some(r)))
        .reduce(|| (0.0, None), max_by_first);
    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|r| (r + 1..bases.len()).map(move |s| (r, s)))
        .collect();
    let (worst_pair_deviation, worst_pair) = pairs
        .par_iter()
        .map(|&(r, s)| (pair_deviation(&bases[r], &bases[s], target), Some((r, s))))
        .reduce(|| (0.0, None), max_by_first);
    MubReport {
        ok: bases.iter().all(|b| b.dim() == d)
            && worst_unitarity_deviation <= tolerance
            && worst_pair_deviation <= tolerance,
        tolerance,
        worst_pair_deviation,
        worst_pair,
        worst_unitarity_deviation,
        worst_unitarity_basis,
        basis_count: bases.len(),
    }
}

fn max_by_first<T: Copy>(a: (f64, Option<T>), b: (f64, Option<T>)) -> (f64, Option<T>) {
    match (a.1, b.1) {
        (None, _) => b,
        (_, None) => a,
        _ if b.0 > a.0 => b,
        _ => a,
    }
}

pub fn verify_mub(family: &MubFamily) -> MubReport {
    verify_bases(&family.bases, ANALYTIC_TOL)
}
