//! Prime-field arithmetic and vectors over `F_q`.
//!
//! Residues are stored as `u32` with `q < 2^31`, so every product fits in a
//! `u64` before reduction. Only prime moduli are accepted; prime powers are
//! rejected with [`Error::ExtensionFieldUnsupported`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_MODULUS: u64 = 1 << 31;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the witness set {2, 3, 5, 7, 11, 13, 17} is
/// exact far beyond 2^32.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn check_modulus(q: u64) -> Result<()> {
    if q >= MAX_MODULUS {
        return Err(Error::ModulusTooLarge(q));
    }
    if is_prime(q) {
        return Ok(());
    }
    if q >= 4 {
        let mut p = 2;
        while p * p <= q && !q.is_multiple_of(p) {
            p += 1;
        }
        if q.is_multiple_of(p) && is_prime(p) {
            let mut rest = q;
            let mut exponent = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                exponent += 1;
            }
            if rest == 1 {
                return Err(Error::ExtensionFieldUnsupported { modulus: q, base: p, exponent });
            }
        }
    }
    Err(Error::NotPrime(q))
}

/// A validated prime modulus. Raw `u32` arithmetic helpers live here so that
/// hot loops (restriction, enumeration) avoid per-element modulus checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    q: u32,
}

impl TryFrom<u32> for PrimeField {
    type Error = Error;
    fn try_from(q: u32) -> Result<Self> {
        PrimeField::new(q)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.q
    }
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        check_modulus(q as u64)?;
        Ok(PrimeField { q })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement { value: (value % self.q as u64) as u32, modulus: self.q }
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    /// Iterates over all `q` residues.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |v| FieldElement { value: v, modulus: self.q })
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        (if s >= self.q as u64 { s - self.q as u64 } else { s }) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.q as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        pow_mod(a as u64, e, self.q as u64) as u32
    }

    pub fn inv(&self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.q) {
            return Err(Error::InverseOfZero);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }
}

/// An element of `F_q` carrying its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    value: u32,
    modulus: u32,
}

impl FieldElement {
    pub fn new(value: u64, modulus: u32) -> Result<Self> {
        Ok(PrimeField::new(modulus)?.elem(value))
    }

    pub(crate) fn from_raw(value: u32, modulus: u32) -> Self {
        debug_assert!(value < modulus);
        FieldElement { value, modulus }
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn field(&self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    fn same_field(&self, other: &Self) -> Result<PrimeField> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.field())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let f = self.same_field(other)?;
        Ok(Self::from_raw(f.add(self.value, other.value), self.modulus))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let f = self.same_field(other)?;
        Ok(Self::from_raw(f.sub(self.value, other.value), self.modulus))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let f = self.same_field(other)?;
        Ok(Self::from_raw(f.mul(self.value, other.value), self.modulus))
    }

    pub fn neg(&self) -> Self {
        Self::from_raw(self.field().neg(self.value), self.modulus)
    }

    pub fn inv(&self) -> Result<Self> {
        Ok(Self::from_raw(self.field().inv(self.value)?, self.modulus))
    }

    pub fn pow(&self, e: u64) -> Self {
        Self::from_raw(self.field().pow(self.value, e), self.modulus)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A vector in `F_q^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldVector {
    modulus: u32,
    entries: Vec<u32>,
}

impl FieldVector {
    pub fn new(field: PrimeField, entries: impl IntoIterator<Item = u64>) -> Result<Self> {
        let entries: Vec<u32> = entries.into_iter().map(|v| field.elem(v).value).collect();
        if entries.is_empty() {
            return Err(Error::InvalidParams("vector length must be positive".into()));
        }
        Ok(FieldVector { modulus: field.modulus(), entries })
    }

    pub fn from_elements(elements: &[FieldElement]) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidParams("vector length must be positive".into()))?;
        for e in elements {
            if e.modulus != first.modulus {
                return Err(Error::ModulusMismatch(first.modulus, e.modulus));
            }
        }
        Ok(FieldVector { modulus: first.modulus, entries: elements.iter().map(|e| e.value).collect() })
    }

    pub(crate) fn from_raw(modulus: u32, entries: Vec<u32>) -> Self {
        FieldVector { modulus, entries }
    }

    pub fn zeros(field: PrimeField, len: usize) -> Self {
        FieldVector { modulus: field.modulus(), entries: vec![0; len] }
    }

    pub fn unit(field: PrimeField, len: usize, i: usize) -> Self {
        let mut v = Self::zeros(field, len);
        v.entries[i] = 1;
        v
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> FieldElement {
        FieldElement::from_raw(self.entries[i], self.modulus)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(())
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: u32, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let f = self.field();
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| f.add(a, f.mul(c, b))).collect();
        Ok(FieldVector { modulus: self.modulus, entries })
    }

    pub fn scale(&self, c: u32) -> Self {
        let f = self.field();
        FieldVector { modulus: self.modulus, entries: self.entries.iter().map(|&a| f.mul(a, c)).collect() }
    }

    /// Enumerates `F_q^len` in lexicographic order (last coordinate fastest).
    pub fn enumerate_all(field: PrimeField, len: usize) -> impl Iterator<Item = FieldVector> {
        let q = field.modulus() as u64;
        let total = q.checked_pow(len as u32).unwrap_or(u64::MAX);
        (0..total).map(move |mut idx| {
            let mut entries = vec![0u32; len];
            for slot in entries.iter_mut().rev() {
                *slot = (idx % q) as u32;
                idx /= q;
            }
            FieldVector { modulus: field.modulus(), entries }
        })
    }
}

impl fmt::Display for FieldVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// In-place reduced row-echelon form over `F_q`; returns the pivot columns.
pub fn row_reduce(field: PrimeField, rows: &mut [Vec<u32>]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, p);
        let inv = field.inv(rows[r][col]).expect("pivot is nonzero");
        for v in rows[r].iter_mut() {
            *v = field.mul(*v, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let factor = rows[i][col];
                let pivot_row = rows[r].clone();
                for (x, &p) in rows[i].iter_mut().zip(&pivot_row) {
                    *x = field.sub(*x, field.mul(factor, p));
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}

/// True iff `y1` and `y2` span a two-dimensional subspace.
pub fn linearly_independent(y1: &FieldVector, y2: &FieldVector) -> Result<bool> {
    y1.check_compatible(y2)?;
    let mut rows = vec![y1.entries.clone(), y2.entries.clone()];
    Ok(row_reduce(y1.field(), &mut rows).len() == 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(v: u64, q: u32) -> FieldElement {
        FieldElement::new(v, q).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(fe(3, 5).add(&fe(4, 5)).unwrap().value(), 2);
        assert_eq!(fe(0, 7).add(&fe(3, 7)).unwrap(), fe(3, 7));
        assert_eq!(fe(6, 7).add(&fe(6, 7)).unwrap().value(), 5);
        assert_eq!(fe(1, 5).add(&fe(1, 7)), Err(Error::ModulusMismatch(5, 7)));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(fe(2, 7).inv().unwrap().value(), 4);
        for q in [2, 3, 5, 7, 11, 101] {
            assert_eq!(fe(1, q).inv().unwrap().value(), 1);
        }
        assert_eq!(fe(4, 5).inv().unwrap().value(), 4);
        assert_eq!(fe(0, 5).inv(), Err(Error::InverseOfZero));
    }

    #[test]
    fn rejects_composites_and_prime_powers() {
        assert_eq!(PrimeField::new(6), Err(Error::NotPrime(6)));
        assert_eq!(PrimeField::new(1), Err(Error::NotPrime(1)));
        assert!(matches!(PrimeField::new(9), Err(Error::ExtensionFieldUnsupported { base: 3, exponent: 2, .. })));
        assert!(matches!(PrimeField::new(8), Err(Error::ExtensionFieldUnsupported { base: 2, exponent: 3, .. })));
        assert_eq!(PrimeField::new(2_147_483_659), Err(Error::ModulusTooLarge(2_147_483_659)));
        assert!(PrimeField::new(2_147_483_647).is_ok());
        assert!(PrimeField::new(2_147_483_629).is_ok());
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0u64..5000 {
            let naive = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), naive, "n = {n}");
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2u32, 3, 5, 7] {
            let f = PrimeField::new(q).unwrap();
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.add(f.sub(a, b), b), a);
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    let inv = f.inv(a).unwrap();
                    assert_eq!(f.mul(a, inv), 1);
                    assert_eq!(f.inv(inv).unwrap(), a);
                }
            }
        }
    }

    #[test]
    fn independence_examples() {
        let f = PrimeField::new(5).unwrap();
        let v = |e: &[u64]| FieldVector::new(f, e.iter().copied()).unwrap();
        assert!(linearly_independent(&v(&[1, 0]), &v(&[0, 1])).unwrap());
        assert!(!linearly_independent(&v(&[1, 2]), &v(&[2, 4])).unwrap());
        assert!(!linearly_independent(&v(&[0, 0]), &v(&[1, 0])).unwrap());
        assert!(matches!(linearly_independent(&v(&[1, 0]), &v(&[1, 0, 0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn independence_is_symmetric_exhaustive() {
        let f = PrimeField::new(3).unwrap();
        let all: Vec<_> = FieldVector::enumerate_all(f, 2).collect();
        for a in &all {
            for b in &all {
                let brute = (0..3u32)
                    .all(|c1| (0..3u32).all(|c2| (c1 == 0 && c2 == 0) || !a.scale(c1).axpy(c2, b).unwrap().is_zero()));
                assert_eq!(linearly_independent(a, b).unwrap(), brute);
                assert_eq!(linearly_independent(b, a).unwrap(), brute);
            }
        }
    }
}
