//! Multivariate polynomials over `F_q`, affine planes, and restriction of a
//! polynomial to a plane.
//!
//! A plane is always stored in canonical form: its direction space as a
//! reduced row-echelon pair of rows, and its base point with the two pivot
//! coordinates zeroed. Two parametrizations of the same point set therefore
//! produce identical [`AffinePlane`] values, and a plane answer can be keyed
//! on the plane alone.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{linearly_independent, row_reduce, FieldElement, FieldVector, PrimeField};

/// Guard on `q^m` for exhaustive point enumeration.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Sparse polynomial in `m` variables with total degree at most `degree_bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MultiPolyJson", into = "MultiPolyJson")]
pub struct MultiPoly {
    field: PrimeField,
    num_vars: usize,
    degree_bound: u32,
    terms: BTreeMap<Vec<u32>, u32>,
}

#[derive(Serialize, Deserialize)]
struct MultiPolyJson {
    modulus: u32,
    num_vars: usize,
    degree_bound: u32,
    coefficients: Vec<MonomialJson>,
}

#[derive(Serialize, Deserialize)]
struct MonomialJson {
    exponents: Vec<u32>,
    value: u32,
}

impl TryFrom<MultiPolyJson> for MultiPoly {
    type Error = Error;
    fn try_from(j: MultiPolyJson) -> Result<Self> {
        let field = PrimeField::new(j.modulus)?;
        MultiPoly::new(
            field,
            j.num_vars,
            j.degree_bound,
            j.coefficients.into_iter().map(|m| (m.exponents, m.value as u64)),
        )
    }
}

impl From<MultiPoly> for MultiPolyJson {
    fn from(p: MultiPoly) -> Self {
        MultiPolyJson {
            modulus: p.field.modulus(),
            num_vars: p.num_vars,
            degree_bound: p.degree_bound,
            coefficients: p.terms.into_iter().map(|(exponents, value)| MonomialJson { exponents, value }).collect(),
        }
    }
}

impl MultiPoly {
    pub fn new(
        field: PrimeField,
        num_vars: usize,
        degree_bound: u32,
        terms: impl IntoIterator<Item = (Vec<u32>, u64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != num_vars {
                return Err(Error::DimensionMismatch { expected: num_vars, got: exps.len() });
            }
            let degree: u32 = exps.iter().sum();
            if degree > degree_bound {
                return Err(Error::DegreeViolation { degree, bound: degree_bound });
            }
            let c = field.elem(c).value();
            let slot = map.entry(exps).or_insert(0);
            *slot = field.add(*slot, c);
        }
        map.retain(|_, c| *c != 0);
        Ok(MultiPoly { field, num_vars, degree_bound, terms: map })
    }

    pub fn zero(field: PrimeField, num_vars: usize, degree_bound: u32) -> Self {
        MultiPoly { field, num_vars, degree_bound, terms: BTreeMap::new() }
    }

    pub fn constant(field: PrimeField, num_vars: usize, degree_bound: u32, c: u64) -> Self {
        Self::new(field, num_vars, degree_bound, [(vec![0; num_vars], c)]).expect("constant fits any bound")
    }

    /// The coordinate function `x_i` (0-based).
    pub fn variable(field: PrimeField, num_vars: usize, degree_bound: u32, i: usize) -> Result<Self> {
        if i >= num_vars {
            return Err(Error::DimensionMismatch { expected: num_vars, got: i + 1 });
        }
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Self::new(field, num_vars, degree_bound, [(e, 1)])
    }

    /// Uniformly random polynomial over all monomials of total degree `<= d`.
    pub fn random<R: Rng + ?Sized>(field: PrimeField, num_vars: usize, d: u32, rng: &mut R) -> Self {
        let terms = monomials(num_vars, d)
            .into_iter()
            .map(|e| (e, rng.gen_range(0..field.modulus()) as u64))
            .collect::<Vec<_>>();
        Self::new(field, num_vars, d, terms).expect("monomials respect the bound")
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], FieldElement)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), FieldElement::from_raw(c, self.field.modulus())))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// `self - other` over a common degree bound.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let bound = self.degree_bound.max(other.degree_bound);
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| (e.clone(), c as u64))
            .chain(other.terms.iter().map(|(e, &c)| (e.clone(), self.field.neg(c) as u64)));
        Self::new(self.field, self.num_vars, bound, terms)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::ModulusMismatch(self.field.modulus(), other.field.modulus()));
        }
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: other.num_vars });
        }
        Ok(())
    }

    pub fn evaluate(&self, point: &FieldVector) -> Result<FieldElement> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: point.len() });
        }
        if point.modulus() != self.field.modulus() {
            return Err(Error::ModulusMismatch(self.field.modulus(), point.modulus()));
        }
        Ok(FieldElement::from_raw(self.evaluate_raw(point.raw()), self.field.modulus()))
    }

    pub(crate) fn evaluate_raw(&self, point: &[u32]) -> u32 {
        let f = self.field;
        let dmax = self.total_degree() as usize;
        // powers[k][e] = point[k]^e
        let powers: Vec<Vec<u32>> = point
            .iter()
            .map(|&x| {
                let mut row = Vec::with_capacity(dmax + 1);
                let mut acc = 1 % f.modulus();
                for _ in 0..=dmax {
                    row.push(acc);
                    acc = f.mul(acc, x);
                }
                row
            })
            .collect();
        self.terms.iter().fold(0, |sum, (exps, &c)| {
            let term = exps.iter().enumerate().fold(c, |acc, (k, &e)| f.mul(acc, powers[k][e as usize]));
            f.add(sum, term)
        })
    }
}

/// All exponent vectors of length `num_vars` and total degree `<= d`, in
/// lexicographic order.
pub fn monomials(num_vars: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, left: usize, budget: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=budget {
            prefix.push(e);
            rec(prefix, left - 1, budget - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(num_vars), num_vars, d, &mut out);
    out
}

/// A two-dimensional affine subspace of `F_q^m` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffinePlane {
    base: FieldVector,
    basis: [FieldVector; 2],
    pivots: [usize; 2],
}

impl AffinePlane {
    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn field(&self) -> PrimeField {
        self.base.field()
    }

    pub fn base_point(&self) -> &FieldVector {
        &self.base
    }

    pub fn basis(&self) -> &[FieldVector; 2] {
        &self.basis
    }

    pub fn pivots(&self) -> [usize; 2] {
        self.pivots
    }

    /// `base + t1 * basis[0] + t2 * basis[1]`.
    pub fn point(&self, t: (FieldElement, FieldElement)) -> FieldVector {
        self.point_raw(t.0.value(), t.1.value())
    }

    pub(crate) fn point_raw(&self, t1: u32, t2: u32) -> FieldVector {
        let f = self.field();
        let entries = (0..self.ambient_dim())
            .map(|k| {
                let a = f.mul(t1, self.basis[0].raw()[k]);
                let b = f.mul(t2, self.basis[1].raw()[k]);
                f.add(self.base.raw()[k], f.add(a, b))
            })
            .collect();
        FieldVector::from_raw(f.modulus(), entries)
    }

    /// Plane coordinates of `x`, or `None` if `x` is not on the plane.
    pub fn coordinates(&self, x: &FieldVector) -> Option<(u32, u32)> {
        if x.len() != self.ambient_dim() || x.modulus() != self.base.modulus() {
            return None;
        }
        let t = (x.raw()[self.pivots[0]], x.raw()[self.pivots[1]]);
        (self.point_raw(t.0, t.1) == *x).then_some(t)
    }

    pub fn contains(&self, x: &FieldVector) -> bool {
        self.coordinates(x).is_some()
    }

    /// All `q^2` points, indexed by `(t1, t2)` in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = ((u32, u32), FieldVector)> + '_ {
        let q = self.field().modulus();
        (0..q).flat_map(move |t1| (0..q).map(move |t2| ((t1, t2), self.point_raw(t1, t2))))
    }
}

/// The canonical plane `{x + t1*y1 + t2*y2}`.
pub fn canonical_plane(x: &FieldVector, y1: &FieldVector, y2: &FieldVector) -> Result<AffinePlane> {
    if x.len() != y1.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y1.len() });
    }
    if x.modulus() != y1.modulus() {
        return Err(Error::ModulusMismatch(x.modulus(), y1.modulus()));
    }
    if !linearly_independent(y1, y2)? {
        return Err(Error::DependentDirections);
    }
    let field = x.field();
    let mut rows = vec![y1.raw().to_vec(), y2.raw().to_vec()];
    let pivots = row_reduce(field, &mut rows);
    let b1 = FieldVector::from_raw(field.modulus(), rows[0].clone());
    let b2 = FieldVector::from_raw(field.modulus(), rows[1].clone());
    let base = x.axpy(field.neg(x.raw()[pivots[0]]), &b1)?.axpy(field.neg(x.raw()[pivots[1]]), &b2)?;
    Ok(AffinePlane { base, basis: [b1, b2], pivots: [pivots[0], pivots[1]] })
}

/// A bivariate polynomial in plane coordinates `(t1, t2)`: the answer format
/// for plane questions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BivariateJson", into = "BivariateJson")]
pub struct BivariateRestriction {
    field: PrimeField,
    degree_bound: u32,
    coeffs: BTreeMap<(u32, u32), u32>,
}

#[derive(Serialize, Deserialize)]
struct BivariateJson {
    modulus: u32,
    degree_bound: u32,
    /// `[i, j, c]` triples in graded order.
    coefficients: Vec<[u32; 3]>,
}

impl TryFrom<BivariateJson> for BivariateRestriction {
    type Error = Error;
    fn try_from(j: BivariateJson) -> Result<Self> {
        let field = PrimeField::new(j.modulus)?;
        BivariateRestriction::new(field, j.degree_bound, j.coefficients.into_iter().map(|[i, k, c]| ((i, k), c as u64)))
    }
}

impl From<BivariateRestriction> for BivariateJson {
    fn from(b: BivariateRestriction) -> Self {
        BivariateJson {
            modulus: b.field.modulus(),
            degree_bound: b.degree_bound,
            coefficients: b.graded_coefficients().into_iter().map(|((i, j), c)| [i, j, c]).collect(),
        }
    }
}

impl BivariateRestriction {
    pub fn new(
        field: PrimeField,
        degree_bound: u32,
        coeffs: impl IntoIterator<Item = ((u32, u32), u64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((i, j), c) in coeffs {
            if i + j > degree_bound {
                return Err(Error::DegreeViolation { degree: i + j, bound: degree_bound });
            }
            let slot = map.entry((i, j)).or_insert(0);
            *slot = field.add(*slot, field.elem(c).value());
        }
        map.retain(|_, c| *c != 0);
        Ok(BivariateRestriction { field, degree_bound, coeffs: map })
    }

    pub fn constant(field: PrimeField, degree_bound: u32, c: u64) -> Self {
        Self::new(field, degree_bound, [((0, 0), c)]).expect("constant fits")
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn coefficient(&self, i: u32, j: u32) -> u32 {
        self.coeffs.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.coeffs.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    /// Nonzero coefficients ordered by total degree ascending, then by the
    /// `t1` exponent descending.
    pub fn graded_coefficients(&self) -> Vec<((u32, u32), u32)> {
        let mut v: Vec<_> = self.coeffs.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_by(|((a1, a2), _), ((b1, b2), _)| (a1 + a2).cmp(&(b1 + b2)).then(b1.cmp(a1)));
        v
    }

    pub fn evaluate(&self, t: (FieldElement, FieldElement)) -> FieldElement {
        FieldElement::from_raw(self.evaluate_raw(t.0.value(), t.1.value()), self.field.modulus())
    }

    pub(crate) fn evaluate_raw(&self, t1: u32, t2: u32) -> u32 {
        let f = self.field;
        self.coeffs.iter().fold(0, |acc, (&(i, j), &c)| {
            let term = f.mul(c, f.mul(f.pow(t1, i as u64), f.pow(t2, j as u64)));
            f.add(acc, term)
        })
    }
}

/// Dense bivariate scratch polynomial indexed `[i][j]`.
#[derive(Clone)]
struct DenseBivariate {
    deg: usize,
    c: Vec<Vec<u32>>,
}

impl DenseBivariate {
    fn zero(deg: usize) -> Self {
        DenseBivariate { deg, c: vec![vec![0; deg + 1]; deg + 1] }
    }

    fn one(deg: usize) -> Self {
        let mut p = Self::zero(deg);
        p.c[0][0] = 1;
        p
    }

    fn mul(&self, other: &Self, f: PrimeField) -> Self {
        let mut out = Self::zero(self.deg);
        for i in 0..=self.deg {
            for j in 0..=self.deg - i {
                let a = self.c[i][j];
                if a == 0 {
                    continue;
                }
                for k in 0..=self.deg - i - j {
                    for l in 0..=self.deg - i - j - k {
                        let b = other.c[k][l];
                        if b != 0 {
                            out.c[i + k][j + l] = f.add(out.c[i + k][j + l], f.mul(a, b));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Symbolic substitution of the canonical parametrization of `s` into `g`.
pub fn restrict(g: &MultiPoly, s: &AffinePlane) -> Result<BivariateRestriction> {
    if g.num_vars != s.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: g.num_vars, got: s.ambient_dim() });
    }
    if g.field != s.field() {
        return Err(Error::ModulusMismatch(g.field.modulus(), s.field().modulus()));
    }
    let f = g.field;
    let deg = g.total_degree() as usize;
    // linear[k] = base_k + t1 * b1_k + t2 * b2_k, with its powers cached.
    let powers: Vec<Vec<DenseBivariate>> = (0..g.num_vars)
        .map(|k| {
            let mut lin = DenseBivariate::zero(deg);
            lin.c[0][0] = s.base.raw()[k];
            if deg >= 1 {
                lin.c[1][0] = s.basis[0].raw()[k];
                lin.c[0][1] = s.basis[1].raw()[k];
            }
            let mut pw = vec![DenseBivariate::one(deg)];
            for e in 1..=deg {
                let next = pw[e - 1].mul(&lin, f);
                pw.push(next);
            }
            pw
        })
        .collect();
    let mut acc = DenseBivariate::zero(deg);
    for (exps, &c) in &g.terms {
        let mut term = DenseBivariate::zero(deg);
        term.c[0][0] = c;
        for (k, &e) in exps.iter().enumerate() {
            if e > 0 {
                term = term.mul(&powers[k][e as usize], f);
            }
        }
        for i in 0..=deg {
            for j in 0..=deg - i {
                acc.c[i][j] = f.add(acc.c[i][j], term.c[i][j]);
            }
        }
    }
    let coeffs = (0..=deg).flat_map(|i| (0..=deg - i).map(move |j| (i, j)));
    BivariateRestriction::new(f, g.degree_bound, coeffs.map(|(i, j)| ((i as u32, j as u32), acc.c[i][j] as u64)))
}

/// The unique bivariate polynomial of degree `<= d` through the samples.
pub fn interpolate_bivariate(
    samples: &BTreeMap<(u32, u32), FieldElement>,
    d: u32,
    field: PrimeField,
) -> Result<BivariateRestriction> {
    if field.modulus() <= d {
        return Err(Error::InvalidParams(format!("interpolation needs q > d (q = {}, d = {d})", field.modulus())));
    }
    let unknowns: Vec<(u32, u32)> = (0..=d).flat_map(|s| (0..=s).rev().map(move |i| (i, s - i))).collect();
    let n = unknowns.len();
    let mut rows: Vec<Vec<u32>> = samples
        .iter()
        .map(|(&(t1, t2), v)| {
            let mut row: Vec<u32> =
                unknowns.iter().map(|&(i, j)| field.mul(field.pow(t1, i as u64), field.pow(t2, j as u64))).collect();
            row.push(v.value() % field.modulus());
            row
        })
        .collect();
    let pivots = row_reduce(field, &mut rows);
    if pivots.last() == Some(&n) {
        return Err(Error::NoConsistentPolynomial(d));
    }
    if pivots.len() < n {
        return Err(Error::Underdetermined { rank: pivots.len(), unknowns: n });
    }
    let coeffs = pivots.iter().enumerate().map(|(r, &col)| (unknowns[col], rows[r][n] as u64));
    BivariateRestriction::new(field, d, coeffs)
}

/// Exact fraction of `x in F_q^m` with `g(x) = h(x)`.
pub fn agreement_fraction(g: &MultiPoly, h: &MultiPoly) -> Result<Ratio<u64>> {
    g.check_compatible(h)?;
    let size = (g.field.modulus() as u128).saturating_pow(g.num_vars as u32);
    if size > ENUMERATION_LIMIT {
        return Err(Error::DomainTooLarge { size, limit: ENUMERATION_LIMIT });
    }
    let diff = g.sub(h)?;
    let agree =
        FieldVector::enumerate_all(g.field, g.num_vars).filter(|x| diff.evaluate_raw(x.raw()) == 0).count() as u64;
    Ok(Ratio::new(agree, size as u64))
}
