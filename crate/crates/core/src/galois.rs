//! Exact arithmetic in GF(p^N).
//!
//! Elements are identified with their integer label `e = Σ e_n p^n`, where
//! `(e_0, …, e_{N-1})` are the little-endian coefficients of the polynomial
//! representative modulo the field's irreducible modulus. Addition is
//! digit-wise mod `p`; multiplication goes through discrete log / exp tables
//! built once when the context is created.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order. Keeps exhaustive checks tractable.
pub const MAX_ORDER: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaloisError {
    #[error("characteristic {0} is not prime")]
    NotPrime(usize),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{n} exceeds the supported maximum of {max}")]
    TooLarge { p: usize, n: usize, max: usize },
    #[error("{0} is not a prime power")]
    NotPrimePower(usize),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("invalid digit vector {0:?}")]
    InvalidDigits(Vec<usize>),
    #[error("element {value} is outside the field of order {order}")]
    OutOfRange { value: usize, order: usize },
    #[error("elements belong to different fields")]
    ContextMismatch,
    #[error("division by zero")]
    DivisionByZero,
}

pub(crate) fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 1;
    }
    true
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Splits `d` into `(p, N)` with `d = p^N`, `p` prime.
pub fn factor_prime_power(d: usize) -> Result<(usize, usize), GaloisError> {
    if d < 2 {
        return Err(GaloisError::NotPrimePower(d));
    }
    let p = (2..=d).find(|f| d.is_multiple_of(*f)).unwrap_or(d);
    let mut rest = d;
    let mut n = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        n += 1;
    }
    if rest != 1 {
        return Err(GaloisError::NotPrimePower(d));
    }
    Ok((p, n))
}

/// Schoolbook product of two polynomials of degree < `n` over GF(p),
/// reduced by the monic `modulus` (length `n + 1`, little-endian).
pub fn poly_mul_mod(a: &[usize], b: &[usize], modulus: &[usize], p: usize) -> Vec<usize> {
    let n = modulus.len() - 1;
    let mut prod = vec![0usize; 2 * n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for deg in (n..2 * n).rev() {
        let c = prod[deg];
        if c != 0 {
            for (i, &m) in modulus.iter().enumerate() {
                let idx = deg - n + i;
                prod[idx] = (prod[idx] + (p - c) * m) % p;
            }
        }
    }
    prod.truncate(n);
    prod
}

/// Remainder of `num` modulo the monic `den` (both little-endian).
fn poly_rem(num: &[usize], den: &[usize], p: usize) -> Vec<usize> {
    let dd = den.len() - 1;
    let mut r = num.to_vec();
    if r.len() <= dd {
        return r;
    }
    for k in (dd..r.len()).rev() {
        let q = r[k];
        if q != 0 {
            for (i, &c) in den.iter().enumerate() {
                let idx = k - dd + i;
                r[idx] = (r[idx] + (p - q) * c) % p;
            }
        }
    }
    r.truncate(dd);
    r
}

fn label_digits(mut value: usize, p: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(value % p);
        value /= p;
    }
    out
}

fn digits_label(digits: &[usize], p: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &x| acc * p + x)
}

/// Exhaustive irreducibility test: no monic factor of degree `1..=N/2`.
pub fn is_irreducible(modulus: &[usize], p: usize) -> bool {
    let n = match modulus.len().checked_sub(1) {
        Some(n) if n >= 1 => n,
        _ => return false,
    };
    if modulus[n] != 1 {
        return false;
    }
    for deg in 1..=n / 2 {
        for low in 0..p.pow(deg as u32) {
            let mut factor = label_digits(low, p, deg);
            factor.push(1);
            if poly_rem(modulus, &factor, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible polynomial of degree `n`,
/// ordering candidates by the integer label of their lower coefficients.
pub fn smallest_irreducible(p: usize, n: usize) -> Vec<usize> {
    (0..p.pow(n as u32))
        .map(|low| {
            let mut m = label_digits(low, p, n);
            m.push(1);
            m
        })
        .find(|m| is_irreducible(m, p))
        .expect("an irreducible polynomial exists for every degree")
}

struct FieldData {
    p: usize,
    n: usize,
    order: usize,
    modulus: Vec<usize>,
    exp: Vec<usize>,
    log: Vec<usize>,
}

/// A finite field GF(p^N) with a fixed irreducible modulus.
///
/// Cheap to clone; all clones share the same lookup tables.
#[derive(Clone)]
pub struct FieldCtx {
    inner: Arc<FieldData>,
}

impl FieldCtx {
    /// Builds GF(p^n) using the smallest monic irreducible modulus.
    pub fn new(p: usize, n: usize) -> Result<Self, GaloisError> {
        Self::validate_params(p, n)?;
        Self::build(p, n, smallest_irreducible(p, n))
    }

    /// Builds GF(p^n) with a caller-chosen modulus.
    pub fn with_modulus(p: usize, n: usize, modulus: Vec<usize>) -> Result<Self, GaloisError> {
        Self::validate_params(p, n)?;
        if modulus.len() != n + 1 {
            return Err(GaloisError::InvalidModulus(format!(
                "expected {} coefficients, got {}",
                n + 1,
                modulus.len()
            )));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(GaloisError::InvalidModulus(
                "coefficient not reduced mod p".into(),
            ));
        }
        if !is_irreducible(&modulus, p) {
            return Err(GaloisError::InvalidModulus(format!(
                "{modulus:?} is not monic irreducible over GF({p})"
            )));
        }
        Self::build(p, n, modulus)
    }

    /// Builds the field of order `d`, which must be a prime power.
    pub fn from_order(d: usize) -> Result<Self, GaloisError> {
        let (p, n) = factor_prime_power(d)?;
        Self::new(p, n)
    }

    fn validate_params(p: usize, n: usize) -> Result<(), GaloisError> {
        if !is_prime(p) {
            return Err(GaloisError::NotPrime(p));
        }
        if n == 0 {
            return Err(GaloisError::ZeroDegree);
        }
        match p.checked_pow(n as u32) {
            Some(d) if d <= MAX_ORDER => Ok(()),
            _ => Err(GaloisError::TooLarge {
                p,
                n,
                max: MAX_ORDER,
            }),
        }
    }

    fn build(p: usize, n: usize, modulus: Vec<usize>) -> Result<Self, GaloisError> {
        let order = p.pow(n as u32);
        let group = order - 1;
        let mul = |a: usize, b: usize| {
            digits_label(
                &poly_mul_mod(&label_digits(a, p, n), &label_digits(b, p, n), &modulus, p),
                p,
            )
        };
        let pow = |mut base: usize, mut e: usize| {
            let mut acc = 1;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul(acc, base);
                }
                base = mul(base, base);
                e >>= 1;
            }
            acc
        };
        let factors = prime_factors(group);
        let generator = (1..order)
            .find(|&g| factors.iter().all(|&q| pow(g, group / q) != 1))
            .ok_or_else(|| GaloisError::InvalidModulus("no primitive element found".into()))?;

        let mut exp = Vec::with_capacity(group);
        let mut log = vec![0usize; order];
        let mut x = 1;
        for k in 0..group {
            exp.push(x);
            log[x] = k;
            x = mul(x, generator);
        }
        Ok(Self {
            inner: Arc::new(FieldData {
                p,
                n,
                order,
                modulus,
                exp,
                log,
            }),
        })
    }

    pub fn p(&self) -> usize {
        self.inner.p
    }

    /// Extension degree N.
    pub fn degree(&self) -> usize {
        self.inner.n
    }

    /// Field order d = p^N.
    pub fn order(&self) -> usize {
        self.inner.order
    }

    /// Monic modulus coefficients, little-endian (length N + 1).
    pub fn modulus(&self) -> &[usize] {
        &self.inner.modulus
    }

    pub fn digits(&self, value: usize) -> Vec<usize> {
        label_digits(value, self.inner.p, self.inner.n)
    }

    pub fn from_digits(&self, digits: &[usize]) -> usize {
        digits_label(digits, self.inner.p)
    }

    pub fn check(&self, value: usize) -> Result<usize, GaloisError> {
        if value < self.order() {
            Ok(value)
        } else {
            Err(GaloisError::OutOfRange {
                value,
                order: self.order(),
            })
        }
    }

    pub fn element(&self, value: usize) -> Result<GfElement, GaloisError> {
        self.check(value)?;
        Ok(GfElement {
            ctx: self.clone(),
            value,
        })
    }

    // Raw label arithmetic. Callers guarantee labels are in range.

    pub fn add(&self, a: usize, b: usize) -> usize {
        let p = self.inner.p;
        if p == 2 {
            return a ^ b;
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.inner.n {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        let p = self.inner.p;
        if p == 2 {
            return a;
        }
        let mut a = a;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.inner.n {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        if a == 0 || b == 0 {
            return 0;
        }
        let data = &*self.inner;
        let group = data.order - 1;
        data.exp[(data.log[a] + data.log[b]) % group]
    }

    pub fn inv(&self, a: usize) -> Result<usize, GaloisError> {
        if a == 0 {
            return Err(GaloisError::DivisionByZero);
        }
        let data = &*self.inner;
        let group = data.order - 1;
        Ok(data.exp[(group - data.log[a]) % group])
    }

    pub fn div(&self, a: usize, b: usize) -> Result<usize, GaloisError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// The field element `1 + 1`, i.e. the integer 2 reduced mod p.
    pub fn two(&self) -> usize {
        self.add(1, 1)
    }

    pub fn structure_matrices(&self) -> StructureMatrices {
        StructureMatrices::new(self)
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.p == other.inner.p
                && self.inner.n == other.inner.n
                && self.inner.modulus == other.inner.modulus)
    }
}

impl Eq for FieldCtx {}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.inner.p)
            .field("N", &self.inner.n)
            .field("modulus", &self.inner.modulus)
            .finish()
    }
}

impl fmt::Display for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GF({}^{}) modulus {:?}",
            self.inner.p, self.inner.n, self.inner.modulus
        )
    }
}

/// Wire form of a field: `{"p": .., "N": .., "modulus": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub modulus: Vec<usize>,
}

impl From<&FieldCtx> for FieldSpec {
    fn from(ctx: &FieldCtx) -> Self {
        FieldSpec {
            p: ctx.p(),
            n: ctx.degree(),
            modulus: ctx.modulus().to_vec(),
        }
    }
}

impl TryFrom<FieldSpec> for FieldCtx {
    type Error = GaloisError;

    fn try_from(spec: FieldSpec) -> Result<Self, Self::Error> {
        FieldCtx::with_modulus(spec.p, spec.n, spec.modulus)
    }
}

impl Serialize for FieldCtx {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FieldSpec::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FieldCtx {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let spec = FieldSpec::deserialize(deserializer)?;
        FieldCtx::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// An element of GF(p^N) bound to its field.
#[derive(Clone, PartialEq, Eq)]
pub struct GfElement {
    ctx: FieldCtx,
    value: usize,
}

impl GfElement {
    pub fn from_digits(ctx: &FieldCtx, digits: &[usize]) -> Result<Self, GaloisError> {
        if digits.len() != ctx.degree() || digits.iter().any(|&x| x >= ctx.p()) {
            return Err(GaloisError::InvalidDigits(digits.to_vec()));
        }
        ctx.element(ctx.from_digits(digits))
    }

    pub fn value(&self) -> usize {
        self.value
    }

    pub fn digits(&self) -> Vec<usize> {
        self.ctx.digits(self.value)
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    fn same_field(&self, other: &Self) -> Result<(), GaloisError> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(GaloisError::ContextMismatch)
        }
    }

    fn with(&self, value: usize) -> Self {
        GfElement {
            ctx: self.ctx.clone(),
            value,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GaloisError> {
        self.same_field(other)?;
        Ok(self.with(self.ctx.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GaloisError> {
        self.same_field(other)?;
        Ok(self.with(self.ctx.sub(self.value, other.value)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GaloisError> {
        self.same_field(other)?;
        Ok(self.with(self.ctx.mul(self.value, other.value)))
    }

    pub fn div(&self, other: &Self) -> Result<Self, GaloisError> {
        self.same_field(other)?;
        Ok(self.with(self.ctx.div(self.value, other.value)?))
    }

    pub fn neg(&self) -> Self {
        self.with(self.ctx.neg(self.value))
    }
}

impl fmt::Debug for GfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.value, self.digits())
    }
}

/// The matrices `A^(k)` with `p^m ⊙ p^n = ⊕_k A^(k)_{mn} p^k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureMatrices {
    p: usize,
    /// `a[k][m][n]`
    a: Vec<Vec<Vec<usize>>>,
}

impl StructureMatrices {
    fn new(ctx: &FieldCtx) -> Self {
        let (p, n) = (ctx.p(), ctx.degree());
        let pow = |k: usize| p.pow(k as u32);
        let mut a = vec![vec![vec![0; n]; n]; n];
        for m in 0..n {
            for l in 0..n {
                let prod = ctx.digits(ctx.mul(pow(m), pow(l)));
                for (k, &digit) in prod.iter().enumerate() {
                    a[k][m][l] = digit;
                }
            }
        }
        StructureMatrices { p, a }
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    pub fn get(&self, k: usize, m: usize, n: usize) -> usize {
        self.a[k][m][n]
    }

    pub fn matrix(&self, k: usize) -> &[Vec<usize>] {
        &self.a[k]
    }

    /// Integer quadratic form `vᵀ A^(k) v`, not reduced.
    pub fn quadratic_form(&self, k: usize, v: &[usize]) -> usize {
        let a = &self.a[k];
        let mut acc = 0;
        for (m, &vm) in v.iter().enumerate() {
            if vm == 0 {
                continue;
            }
            for (n, &vn) in v.iter().enumerate() {
                acc += vm * a[m][n] * vn;
            }
        }
        acc
    }

    /// `f_k(r) = A^(k) r mod p`, returned as a digit vector.
    pub fn apply(&self, k: usize, r: &[usize]) -> Vec<usize> {
        self.a[k]
            .iter()
            .map(|row| row.iter().zip(r).map(|(x, y)| x * y).sum::<usize>() % self.p)
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.a
            .iter()
            .all(|mat| (0..mat.len()).all(|i| (0..mat.len()).all(|j| mat[i][j] == mat[j][i])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: usize, n: usize) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    #[test]
    fn small_examples() {
        let f4 = gf(2, 2);
        assert_eq!(f4.modulus(), &[1, 1, 1]);
        assert_eq!(f4.add(2, 3), 1);
        assert_eq!(f4.mul(2, 2), 3);
        assert_eq!(f4.div(1, 1).unwrap(), 1);
        assert_eq!(f4.sub(3, 2), 1);

        let f3 = gf(3, 1);
        assert_eq!(f3.add(2, 2), 1);
        assert_eq!(f3.mul(2, 2), 1);
        assert_eq!(f3.div(1, 2).unwrap(), 2);

        let f9 = gf(3, 2);
        let a = GfElement::from_digits(&f9, &[1, 2]).unwrap();
        let b = GfElement::from_digits(&f9, &[2, 2]).unwrap();
        assert_eq!(a.add(&b).unwrap().digits(), vec![0, 1]);
    }

    #[test]
    fn gf3_inverse_matches_brute_force() {
        let f3 = gf(3, 1);
        let brute = (0..3).find(|&x| f3.mul(2, x) == 1).unwrap();
        assert_eq!(f3.div(1, 2).unwrap(), brute);
    }

    #[test]
    fn chosen_moduli() {
        assert_eq!(gf(2, 1).modulus(), &[0, 1]);
        assert_eq!(gf(2, 3).modulus(), &[1, 1, 0, 1]);
        assert_eq!(gf(3, 2).modulus(), &[1, 0, 1]);
        assert_eq!(gf(2, 4).modulus(), &[1, 1, 0, 0, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(FieldCtx::new(4, 1).unwrap_err(), GaloisError::NotPrime(4));
        assert_eq!(FieldCtx::new(2, 0).unwrap_err(), GaloisError::ZeroDegree);
        assert!(matches!(
            FieldCtx::new(2, 17),
            Err(GaloisError::TooLarge { .. })
        ));
        assert!(FieldCtx::new(2, 16).is_ok());
        assert!(matches!(
            FieldCtx::from_order(6),
            Err(GaloisError::NotPrimePower(6))
        ));
        assert!(FieldCtx::with_modulus(2, 2, vec![1, 0, 1]).is_err());
    }

    #[test]
    fn division_by_zero() {
        let f = gf(2, 3);
        assert_eq!(f.div(3, 0), Err(GaloisError::DivisionByZero));
        let a = f.element(5).unwrap();
        let zero = f.element(0).unwrap();
        assert_eq!(a.div(&zero), Err(GaloisError::DivisionByZero));
    }

    #[test]
    fn mismatched_contexts() {
        let a = gf(2, 2).element(1).unwrap();
        let b = gf(3, 1).element(1).unwrap();
        assert_eq!(a.add(&b), Err(GaloisError::ContextMismatch));
        assert_eq!(a.mul(&b), Err(GaloisError::ContextMismatch));
        // Same parameters built separately compare equal.
        let c = gf(2, 2).element(3).unwrap();
        assert_eq!(a.add(&c).unwrap().value(), 2);
    }

    #[test]
    fn structure_matrices_examples() {
        let a = gf(2, 2).structure_matrices();
        assert_eq!(a.matrix(0), &[vec![1, 0], vec![0, 1]]);
        assert_eq!(a.matrix(1), &[vec![0, 1], vec![1, 1]]);
        assert_eq!(gf(2, 1).structure_matrices().matrix(0), &[vec![1]]);
        assert_eq!(gf(3, 1).structure_matrices().matrix(0), &[vec![1]]);
    }

    fn fields() -> Vec<FieldCtx> {
        [
            (2, 1),
            (2, 2),
            (2, 3),
            (2, 4),
            (3, 1),
            (3, 2),
            (3, 3),
            (5, 1),
            (5, 2),
            (7, 1),
        ]
        .iter()
        .map(|&(p, n)| gf(p, n))
        .collect()
    }

    #[test]
    fn table_multiplication_matches_polynomial_product() {
        for f in fields() {
            for a in 0..f.order() {
                for b in 0..f.order() {
                    let direct = f.from_digits(&poly_mul_mod(
                        &f.digits(a),
                        &f.digits(b),
                        f.modulus(),
                        f.p(),
                    ));
                    assert_eq!(f.mul(a, b), direct, "{f}: {a}*{b}");
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for f in fields().into_iter().filter(|f| f.order() <= 27) {
            let d = f.order();
            for a in 0..d {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..d {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.add(f.sub(a, b), b), a);
                    if b != 0 {
                        assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
                    }
                    for c in 0..d {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn multiplicative_group_is_cyclic() {
        for f in fields() {
            let d = f.order();
            let has_generator = (1..d).any(|g| {
                let mut x = g;
                let mut order = 1;
                while x != 1 {
                    x = f.mul(x, g);
                    order += 1;
                }
                order == d - 1
            });
            assert!(has_generator, "{f}");
        }
    }

    #[test]
    fn structure_matrix_invariants() {
        for f in fields() {
            let (p, n, d) = (f.p(), f.degree(), f.order());
            let a = f.structure_matrices();
            assert!(a.is_symmetric(), "{f}");
            for k in 0..n {
                let mut seen = vec![false; d];
                for r in 0..d {
                    let img = f.from_digits(&a.apply(k, &f.digits(r)));
                    assert!(!seen[img], "f_{k} not injective in {f}");
                    seen[img] = true;
                }
            }
            for m in 0..n {
                for l in 0..n {
                    let rebuilt = (0..n).fold(0, |acc, k| {
                        f.add(acc, f.mul(a.get(k, m, l), p.pow(k as u32)))
                    });
                    assert_eq!(rebuilt, f.mul(p.pow(m as u32), p.pow(l as u32)));
                }
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        let f = gf(3, 3);
        for e in 0..f.order() {
            assert_eq!(f.from_digits(&f.digits(e)), e);
        }
    }

    #[test]
    fn serde_round_trip() {
        let f = gf(3, 2);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"p":3,"N":2,"modulus":[1,0,1]}"#);
        let back: FieldCtx = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<FieldCtx>(r#"{"p":2,"N":2,"modulus":[1,0,1]}"#).is_err());
    }
}
