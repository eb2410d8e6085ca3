//! Permutation-invariant bipartite states, Hermitian operators, measurement
//! families and the bilinear form `<A, B>_Psi = <Psi| A (x) B |Psi>`.
//!
//! A state on `H (x) H` is stored as its coefficient matrix `M`, with
//! `|Psi> = sum_ij M_ij |i>|j>`. Then `<A, B>_Psi = Tr(M^dag A M B^T)`, which
//! is how every expectation is evaluated; the `dim^2`-dimensional vector is
//! never formed. Neither operator is conjugated.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const STATE_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_FLOOR: f64 = -1e-10;
pub const SUM_TOL: f64 = 1e-10;
pub const SUPPORT_CUTOFF: f64 = 1e-10;
pub const ZERO_NORM_TOL: f64 = 1e-14;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn eigenvalues(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending, with
/// eigenvectors as the matching columns.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(m.nrows(), m.nrows(), |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&v| c(f(v)))));
    &vecs * d * vecs.adjoint()
}

/// `exp(i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let d =
        CMat::from_fn(vals.len(), vals.len(), |r, k| if r == k { C64::from_polar(1.0, t * vals[r]) } else { c(0.0) });
    &vecs * d * vecs.adjoint()
}

/// Anything that can be viewed as a square complex matrix.
pub trait AsMatrix {
    fn mat(&self) -> &CMat;
}

impl AsMatrix for CMat {
    fn mat(&self) -> &CMat {
        self
    }
}

/// A Hermitian operator on the local space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Operator {
    matrix: CMat,
}

impl AsMatrix for Operator {
    fn mat(&self) -> &CMat {
        &self.matrix
    }
}

/// `{dim, entries}` with row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let dim = m.nrows();
        let entries =
            (0..dim).flat_map(|r| (0..dim).map(move |k| (r, k))).map(|(r, k)| [m[(r, k)].re, m[(r, k)].im]).collect();
        MatrixJson { dim, entries }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim * self.dim, got: self.entries.len() });
        }
        Ok(CMat::from_fn(self.dim, self.dim, |r, k| {
            let [re, im] = self.entries[r * self.dim + k];
            C64::new(re, im)
        }))
    }
}

impl TryFrom<MatrixJson> for Operator {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        Operator::new(j.to_matrix()?)
    }
}

impl From<Operator> for MatrixJson {
    fn from(o: Operator) -> Self {
        MatrixJson::from_matrix(&o.matrix)
    }
}

impl Operator {
    /// Validates Hermiticity within `1e-12` and stores the exact Hermitian part.
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch(format!("{}x{} operator", matrix.nrows(), matrix.ncols())));
        }
        let dev = max_abs(&(&matrix - matrix.adjoint()));
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Operator { matrix: hermitian_part(&matrix) })
    }

    /// Like [`Operator::new`] and additionally requires `A >= 0`.
    pub fn positive(matrix: CMat) -> Result<Self> {
        let op = Self::new(matrix)?;
        op.check_positive()?;
        Ok(op)
    }

    /// Hermitian part of an arbitrary square matrix.
    pub fn from_hermitian_part(matrix: &CMat) -> Self {
        Operator { matrix: hermitian_part(matrix) }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { matrix: identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Operator { matrix: CMat::zeros(dim, dim) }
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Operator { matrix: identity(dim) * c(s) }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Operator { matrix: CMat::from_fn(n, n, |r, k| if r == k { c(diag[r]) } else { c(0.0) }) }
    }

    /// Orthogonal projector onto the span of the given orthonormal columns.
    pub fn projector(columns: &CMat) -> Self {
        Self::from_hermitian_part(&(columns * columns.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        max_eigenvalue(&self.matrix)
    }

    pub fn check_positive(&self) -> Result<()> {
        let lo = self.min_eigenvalue();
        if lo < PSD_FLOOR {
            return Err(Error::NotPositive(lo));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator { matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator { matrix: &self.matrix - &other.matrix }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { matrix: &self.matrix * c(s) }
    }

    /// `A - A^2`.
    pub fn idempotence_defect(&self) -> Operator {
        Operator::from_hermitian_part(&(&self.matrix - &self.matrix * &self.matrix))
    }

    /// `B A B` for Hermitian `B`.
    pub fn sandwich(&self, outer: &Operator) -> Operator {
        Operator::from_hermitian_part(&(&outer.matrix * &self.matrix * &outer.matrix))
    }

    pub fn transpose(&self) -> Operator {
        Operator { matrix: self.matrix.transpose() }
    }
}

/// A pure state on `H (x) H`, invariant under swapping the registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct BipartiteState {
    coeffs: CMat,
}

impl TryFrom<MatrixJson> for BipartiteState {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        BipartiteState::new(j.to_matrix()?)
    }
}

impl From<BipartiteState> for MatrixJson {
    fn from(s: BipartiteState) -> Self {
        MatrixJson::from_matrix(&s.coeffs)
    }
}

impl BipartiteState {
    /// Requires unit norm and `M = M^T`, both within `1e-12`.
    pub fn new(coeffs: CMat) -> Result<Self> {
        if !coeffs.is_square() || coeffs.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!("{}x{} coefficient matrix", coeffs.nrows(), coeffs.ncols())));
        }
        let norm2 = coeffs.norm_squared();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        let asym = max_abs(&(&coeffs - coeffs.transpose()));
        if asym > STATE_TOL {
            return Err(Error::NotPermutationInvariant(asym));
        }
        let sym = (&coeffs + coeffs.transpose()) * c(0.5);
        Ok(BipartiteState { coeffs: sym })
    }

    /// Symmetrizes and normalizes an arbitrary nonzero coefficient matrix.
    pub fn normalized(coeffs: CMat) -> Result<Self> {
        let sym = (&coeffs + coeffs.transpose()) * c(0.5);
        let n = sym.norm();
        if n * n < ZERO_NORM_TOL {
            return Err(Error::ZeroNormResidual(n * n));
        }
        BipartiteState::new(sym / c(n))
    }

    pub fn maximally_entangled(dim: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        BipartiteState { coeffs: identity(dim) * c(s) }
    }

    /// `M = U D U^T` for a Haar-random unitary `U` and random positive `D`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let u = random_unitary(dim, rng);
        let weights: Vec<f64> = (0..dim).map(|_| 0.2 + rng.gen::<f64>()).collect();
        let d = CMat::from_fn(dim, dim, |r, k| if r == k { c(weights[r]) } else { c(0.0) });
        Self::normalized(&u * d * u.transpose()).expect("nonzero by construction")
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &CMat {
        &self.coeffs
    }

    /// `rho = M M^dag`, the reduced density of either register.
    pub fn reduced_density(&self) -> CMat {
        hermitian_part(&(&self.coeffs * self.coeffs.adjoint()))
    }

    /// Number of reduced-density eigenvalues above `1e-10`.
    pub fn support_dimension(&self) -> usize {
        eigenvalues(&self.reduced_density()).iter().filter(|&&v| v > SUPPORT_CUTOFF).count()
    }

    /// The state as a `dim^2` vector, index `i * dim + j` for `|i>|j>`.
    pub fn to_vector(&self) -> nalgebra::DVector<C64> {
        let d = self.dim();
        nalgebra::DVector::from_fn(d * d, |idx, _| self.coeffs[(idx / d, idx % d)])
    }

    /// `<Psi| A (x) B |Psi>`.
    pub fn pair(&self, a: &impl AsMatrix, b: &impl AsMatrix) -> C64 {
        pair_expectation_raw(a.mat(), b.mat(), self)
    }

    /// `<A, Id>_Psi = Tr(A rho)`.
    pub fn local(&self, a: &impl AsMatrix) -> C64 {
        (self.coeffs.adjoint() * a.mat() * &self.coeffs).trace()
    }
}

fn pair_expectation_raw(a: &CMat, b: &CMat, psi: &BipartiteState) -> C64 {
    let m = &psi.coeffs;
    let k = a * m * b.transpose();
    m.iter().zip(k.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `<A, B>_Psi`, with matching dimensions checked.
pub fn pair_expectation(a: &impl AsMatrix, b: &impl AsMatrix, psi: &BipartiteState) -> Result<C64> {
    for m in [a.mat(), b.mat()] {
        if m.nrows() != psi.dim() || m.ncols() != psi.dim() {
            return Err(Error::DimensionMismatch { expected: psi.dim(), got: m.nrows() });
        }
    }
    Ok(pair_expectation_raw(a.mat(), b.mat(), psi))
}

pub fn maximally_entangled(dim: usize) -> BipartiteState {
    BipartiteState::maximally_entangled(dim)
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_fn(dim, dim, |i, k| {
        if i == k {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / c(d.norm())
            } else {
                c(1.0)
            }
        } else {
            c(0.0)
        }
    });
    q * phases
}

/// Haar-random real orthogonal matrix, as a complex matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    CMat::from_fn(dim, dim, |i, k| c(q[(i, k)] * if r[(k, k)] < 0.0 { -1.0 } else { 1.0 }))
}

/// Real projective measurement: the columns of a random orthogonal matrix
/// split into contiguous blocks. On the maximally entangled state such a
/// measurement is perfectly self-consistent.
pub fn random_real_projective_measurement<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<Operator> {
    projective_from_basis(&random_orthogonal(dim, rng), outcomes)
}

/// Random Hermitian matrix with Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    hermitian_part(&g)
}

/// A sub-measurement `{M^g}`: PSD summands with `sum <= Id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubMeasurementJson", into = "SubMeasurementJson")]
pub struct SubMeasurement {
    outcomes: Vec<String>,
    operators: Vec<Operator>,
    sum: Operator,
}

#[derive(Serialize, Deserialize)]
struct SubMeasurementJson {
    outcomes: Vec<String>,
    operators: Vec<Operator>,
}

impl TryFrom<SubMeasurementJson> for SubMeasurement {
    type Error = Error;
    fn try_from(j: SubMeasurementJson) -> Result<Self> {
        SubMeasurement::new(j.outcomes, j.operators)
    }
}

impl From<SubMeasurement> for SubMeasurementJson {
    fn from(s: SubMeasurement) -> Self {
        SubMeasurementJson { outcomes: s.outcomes, operators: s.operators }
    }
}

impl SubMeasurement {
    pub fn new(outcomes: Vec<String>, operators: Vec<Operator>) -> Result<Self> {
        if outcomes.len() != operators.len() || operators.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} outcome labels for {} operators",
                outcomes.len(),
                operators.len()
            )));
        }
        let dim = operators[0].dim();
        let mut sum = Operator::zero(dim);
        for op in &operators {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: op.dim() });
            }
            op.check_positive()?;
            sum = sum.add(op);
        }
        let top = sum.max_eigenvalue();
        if top > 1.0 + SUM_TOL {
            return Err(Error::SumExceedsIdentity(top));
        }
        Ok(SubMeasurement { outcomes, operators, sum })
    }

    /// Outcomes labelled `"0"`, `"1"`, ...
    pub fn indexed(operators: Vec<Operator>) -> Result<Self> {
        let labels = (0..operators.len()).map(|i| i.to_string()).collect();
        Self::new(labels, operators)
    }

    /// Skips validation; used for solver output already normalized to sum to `Id`.
    pub(crate) fn new_unchecked_labels(operators: Vec<Operator>) -> Self {
        let outcomes = (0..operators.len()).map(|i| i.to_string()).collect();
        Self::from_parts_unchecked(outcomes, operators)
    }

    pub(crate) fn from_parts_unchecked(outcomes: Vec<String>, operators: Vec<Operator>) -> Self {
        let dim = operators[0].dim();
        let sum = operators.iter().fold(Operator::zero(dim), |acc, op| acc.add(op));
        SubMeasurement { outcomes, operators, sum }
    }

    /// Same operators under new outcome labels.
    pub fn relabel(&self, outcomes: Vec<String>) -> Result<Self> {
        if outcomes.len() != self.operators.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} outcomes",
                outcomes.len(),
                self.operators.len()
            )));
        }
        Ok(SubMeasurement { outcomes, operators: self.operators.clone(), sum: self.sum.clone() })
    }

    pub fn zero(outcomes: Vec<String>, dim: usize) -> Self {
        let operators = vec![Operator::zero(dim); outcomes.len()];
        SubMeasurement { outcomes, operators, sum: Operator::zero(dim) }
    }

    pub fn dim(&self) -> usize {
        self.sum.dim()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn operator(&self, g: usize) -> &Operator {
        &self.operators[g]
    }

    /// The cached `sum_g M^g`.
    pub fn total(&self) -> &Operator {
        &self.sum
    }

    /// Deviation of the sum from identity (spectral norm).
    pub fn measurement_defect(&self) -> f64 {
        let dev = self.sum.sub(&Operator::identity(self.dim()));
        let e = eigenvalues(dev.matrix());
        e.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_measurement(&self) -> bool {
        self.measurement_defect() <= SUM_TOL
    }

    /// Completeness error `1 - <M, Id>_Psi`.
    pub fn completeness_error(&self, psi: &BipartiteState) -> f64 {
        1.0 - psi.local(&self.sum).re
    }

    /// A one-question family with this sub-measurement as its only row.
    pub fn as_family(&self) -> MeasurementFamily {
        MeasurementFamily { operators: vec![self.operators.clone()], weights: vec![1.0] }
    }
}

/// A family `{M_x^a}` of sub-measurements indexed by `x`, with a question
/// distribution (uniform unless given).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson", into = "FamilyJson")]
pub struct MeasurementFamily {
    operators: Vec<Vec<Operator>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    operators: Vec<Vec<Operator>>,
}

impl TryFrom<FamilyJson> for MeasurementFamily {
    type Error = Error;
    fn try_from(j: FamilyJson) -> Result<Self> {
        MeasurementFamily::new(j.operators, j.weights)
    }
}

impl From<MeasurementFamily> for FamilyJson {
    fn from(f: MeasurementFamily) -> Self {
        FamilyJson { weights: Some(f.weights), operators: f.operators }
    }
}

impl MeasurementFamily {
    pub fn new(operators: Vec<Vec<Operator>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let nx = operators.len();
        if nx == 0 || operators[0].is_empty() {
            return Err(Error::ShapeMismatch("empty measurement family".into()));
        }
        let na = operators[0].len();
        let dim = operators[0][0].dim();
        for row in &operators {
            if row.len() != na {
                return Err(Error::ShapeMismatch(format!("rows of {na} and {} outcomes", row.len())));
            }
            let mut sum = Operator::zero(dim);
            for op in row {
                if op.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: op.dim() });
                }
                op.check_positive()?;
                sum = sum.add(op);
            }
            let top = sum.max_eigenvalue();
            if top > 1.0 + SUM_TOL {
                return Err(Error::SumExceedsIdentity(top));
            }
        }
        let weights = match weights {
            None => vec![1.0 / nx as f64; nx],
            Some(w) => {
                if w.len() != nx {
                    return Err(Error::ShapeMismatch(format!("{} weights for {nx} questions", w.len())));
                }
                let total: f64 = w.iter().sum();
                if w.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParams("question weights must be a distribution".into()));
                }
                w
            }
        };
        Ok(MeasurementFamily { operators, weights })
    }

    /// Every row must sum to identity within `1e-10`.
    pub fn require_measurement(self) -> Result<Self> {
        for row in &self.operators {
            let mut sum = Operator::zero(self.dim());
            for op in row {
                sum = sum.add(op);
            }
            let dev = max_abs(&(sum.matrix() - identity(self.dim())));
            if dev > SUM_TOL {
                return Err(Error::NotAMeasurement(dev));
            }
        }
        Ok(self)
    }

    pub fn questions(&self) -> usize {
        self.operators.len()
    }

    pub fn outcomes(&self) -> usize {
        self.operators[0].len()
    }

    pub fn dim(&self) -> usize {
        self.operators[0][0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn op(&self, x: usize, a: usize) -> &Operator {
        &self.operators[x][a]
    }

    pub fn row(&self, x: usize) -> &[Operator] {
        &self.operators[x]
    }

    pub fn row_sum(&self, x: usize) -> Operator {
        self.operators[x].iter().fold(Operator::zero(self.dim()), |acc, op| acc.add(op))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.questions() != other.questions() || self.outcomes() != other.outcomes() || self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!(
                "families {}x{} (dim {}) and {}x{} (dim {})",
                self.questions(),
                self.outcomes(),
                self.dim(),
                other.questions(),
                other.outcomes(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// `E_x sum_a <(F_x^a - G_x^a)^dag (F_x^a - G_x^a), Id>_Psi`.
pub fn closeness(f: &MeasurementFamily, g: &MeasurementFamily, psi: &BipartiteState) -> Result<f64> {
    f.same_shape(g)?;
    check_dim(f.dim(), psi)?;
    let mut total = 0.0;
    for x in 0..f.questions() {
        let mut row = 0.0;
        for a in 0..f.outcomes() {
            let diff = f.op(x, a).matrix() - g.op(x, a).matrix();
            row += psi.local(&(diff.adjoint() * &diff)).re;
        }
        total += f.weight(x) * row;
    }
    Ok(total)
}

/// Operator-level version of the closeness functional for arbitrary
/// (possibly non-Hermitian) matrix families `[x][a]` under weights.
pub fn closeness_of_matrices(diffs: &[Vec<CMat>], weights: &[f64], psi: &BipartiteState) -> f64 {
    diffs
        .iter()
        .zip(weights)
        .map(|(row, w)| w * row.iter().map(|d| psi.local(&(d.adjoint() * d)).re).sum::<f64>())
        .sum()
}

pub(crate) fn check_dim(dim: usize, psi: &BipartiteState) -> Result<()> {
    if dim != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), got: dim });
    }
    Ok(())
}

/// `|Phi~> = (Id - T) (x) (Id - T) |Psi>`, returned normalized together with
/// `||Phi~||^2`.
pub fn restricted_state(psi: &BipartiteState, t: &Operator) -> Result<(BipartiteState, f64)> {
    check_dim(t.dim(), psi)?;
    let lo = t.min_eigenvalue();
    if lo < PSD_FLOOR {
        return Err(Error::NotPositive(lo));
    }
    let hi = t.max_eigenvalue();
    if hi > 1.0 + SUM_TOL {
        return Err(Error::SumExceedsIdentity(hi));
    }
    let comp = identity(t.dim()) - t.matrix();
    let tilde = &comp * psi.coeffs() * comp.transpose();
    let norm2 = tilde.norm_squared();
    if norm2 < ZERO_NORM_TOL {
        return Err(Error::ZeroNormResidual(norm2));
    }
    Ok((BipartiteState::normalized(tilde)?, norm2))
}

/// Random projective measurement with `outcomes` parts: the eigenbasis of a
/// Haar unitary is split into contiguous blocks (sizes as even as possible).
pub fn random_projective_measurement<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<Operator> {
    let u = random_unitary(dim, rng);
    projective_from_basis(&u, outcomes)
}

/// Splits the columns of a unitary into `outcomes` contiguous blocks.
pub fn projective_from_basis(u: &CMat, outcomes: usize) -> Vec<Operator> {
    let dim = u.nrows();
    (0..outcomes)
        .map(|a| {
            let lo = a * dim / outcomes;
            let hi = (a + 1) * dim / outcomes;
            if hi == lo {
                Operator::zero(dim)
            } else {
                Operator::projector(&u.columns(lo, hi - lo).into_owned())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kron(a: &CMat, b: &CMat) -> CMat {
        let (n, m) = (a.nrows(), b.nrows());
        CMat::from_fn(n * m, n * m, |r, k| a[(r / m, k / m)] * b[(r % m, k % m)])
    }

    /// Dense `dim^2` oracle for `<Psi| A (x) B |Psi>`.
    fn dense_pair(a: &CMat, b: &CMat, psi: &BipartiteState) -> C64 {
        let v = psi.to_vector();
        (v.adjoint() * kron(a, b) * &v)[(0, 0)]
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn pair_expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = BipartiteState::random(3, &mut rng);
        let id = Operator::identity(3);
        assert!(close(pair_expectation(&id, &id, &psi).unwrap(), c(1.0), 1e-12));

        let me = maximally_entangled(2);
        let a = Operator::diagonal(&[1.0, 0.0]);
        let b = Operator::diagonal(&[0.0, 1.0]);
        assert!(close(me.pair(&a, &b), c(0.0), 1e-15));
        assert!(matches!(pair_expectation(&Operator::identity(2), &id, &psi), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pair_expectation_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in 1..=5 {
            let psi = BipartiteState::random(dim, &mut rng);
            let a = random_hermitian(dim, &mut rng);
            let b = random_hermitian(dim, &mut rng);
            let fast = pair_expectation(&a, &b, &psi).unwrap();
            assert!(close(fast, dense_pair(&a, &b, &psi), 1e-10));
            // symmetric state: swapping the slots leaves the value unchanged
            assert!(close(fast, psi.pair(&b, &a), 1e-10));
            // Hermitian operators give a real value
            assert!(fast.im.abs() < 1e-10);
        }
    }

    #[test]
    fn maximally_entangled_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let me = maximally_entangled(2);
        let s = 1.0 / 2f64.sqrt();
        assert!(max_abs(&(me.coeffs() - identity(2) * c(s))) < 1e-15);
        assert!(BipartiteState::new(me.coeffs().clone()).is_ok());
        let me4 = maximally_entangled(4);
        let a = random_hermitian(4, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let expected = (&a * b.transpose()).trace() / c(4.0);
        assert!(close(me4.pair(&a, &b), expected, 1e-12));
    }

    #[test]
    fn bilinearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = BipartiteState::random(3, &mut rng);
        let (a1, a2, b) = (random_hermitian(3, &mut rng), random_hermitian(3, &mut rng), random_hermitian(3, &mut rng));
        let lhs = psi.pair(&(&a1 * c(2.0) + &a2 * c(-0.5)), &b);
        let rhs = psi.pair(&a1, &b) * c(2.0) + psi.pair(&a2, &b) * c(-0.5);
        assert!(close(lhs, rhs, 1e-12));
        let lhs = psi.pair(&b, &(&a1 + &a2));
        assert!(close(lhs, psi.pair(&b, &a1) + psi.pair(&b, &a2), 1e-12));
    }

    #[test]
    fn state_validation() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(BipartiteState::new(m.clone()).is_ok());
        let asym = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(BipartiteState::new(asym), Err(Error::NotPermutationInvariant(_))));
        assert!(matches!(BipartiteState::new(m * c(2.0)), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn closeness_examples() {
        let me = maximally_entangled(2);
        let f = MeasurementFamily::new(vec![vec![Operator::identity(2)]], None).unwrap();
        let g = MeasurementFamily::new(vec![vec![Operator::zero(2)]], None).unwrap();
        assert_eq!(closeness(&f, &f, &me).unwrap(), 0.0);
        assert!((closeness(&f, &g, &me).unwrap() - 1.0).abs() < 1e-12);
        assert!((closeness(&g, &f, &me).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closeness_scales_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = BipartiteState::random(3, &mut rng);
        let base: Vec<Vec<Operator>> = (0..3).map(|_| random_projective_measurement(3, 2, &mut rng)).collect();
        let dirs: Vec<Vec<CMat>> = (0..3).map(|_| (0..2).map(|_| random_hermitian(3, &mut rng)).collect()).collect();
        let fam = |eta: f64| {
            let ops = base
                .iter()
                .zip(&dirs)
                .map(|(row, drow)| {
                    row.iter()
                        .zip(drow)
                        .map(|(o, d)| Operator::from_hermitian_part(&(o.matrix() + d * c(eta))))
                        .collect()
                })
                .collect::<Vec<Vec<Operator>>>();
            ops
        };
        // perturbed operators need not be PSD, so evaluate the functional directly
        let value = |eta: f64| {
            let diffs: Vec<Vec<CMat>> = fam(eta)
                .iter()
                .zip(&base)
                .map(|(r, b)| r.iter().zip(b).map(|(x, y)| x.matrix() - y.matrix()).collect())
                .collect();
            closeness_of_matrices(&diffs, &[1.0 / 3.0; 3], &psi)
        };
        let ratio = value(0.02) / value(0.01);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn restricted_state_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = BipartiteState::random(3, &mut rng);
        let (phi, n2) = restricted_state(&psi, &Operator::zero(3)).unwrap();
        assert!((n2 - 1.0).abs() < 1e-12);
        assert!(max_abs(&(phi.coeffs() - psi.coeffs())) < 1e-12);
        assert!(matches!(restricted_state(&psi, &Operator::identity(3)), Err(Error::ZeroNormResidual(_))));
    }

    #[test]
    fn restricted_state_norm_for_real_projector() {
        let me = maximally_entangled(4);
        let t = Operator::diagonal(&[1.0, 1.0, 0.0, 0.0]);
        let (phi, n2) = restricted_state(&me, &t).unwrap();
        let p = me.local(&t).re;
        assert!((n2 - (1.0 - p)).abs() < 1e-14);
        assert!(BipartiteState::new(phi.coeffs().clone()).is_ok());
    }

    #[test]
    fn restricted_state_is_valid_for_random_contractions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let psi = BipartiteState::random(4, &mut rng);
            let h = random_hermitian(4, &mut rng);
            let t = Operator::from_hermitian_part(&spectral_map(&h, |v| 0.5 + 0.45 * v.tanh()));
            let (phi, _) = restricted_state(&psi, &t).unwrap();
            assert!((phi.coeffs().norm_squared() - 1.0).abs() < 1e-12);
            assert!(max_abs(&(phi.coeffs() - phi.coeffs().transpose())) < 1e-15);
        }
    }

    #[test]
    fn submeasurement_validation() {
        let half = Operator::scaled_identity(2, 0.6);
        assert!(matches!(SubMeasurement::indexed(vec![half.clone(), half.clone()]), Err(Error::SumExceedsIdentity(_))));
        let neg = Operator::diagonal(&[-0.1, 0.5]);
        assert!(matches!(SubMeasurement::indexed(vec![neg]), Err(Error::NotPositive(_))));
        let s =
            SubMeasurement::indexed(vec![Operator::diagonal(&[1.0, 0.0]), Operator::diagonal(&[0.0, 1.0])]).unwrap();
        assert!(s.is_measurement());
        assert!(s.completeness_error(&maximally_entangled(2)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = BipartiteState::random(2, &mut rng);
        let s = serde_json::to_string(&psi).unwrap();
        let back: BipartiteState = serde_json::from_str(&s).unwrap();
        assert!(max_abs(&(back.coeffs() - psi.coeffs())) < 1e-15);
        let fam = MeasurementFamily::new(vec![random_projective_measurement(2, 2, &mut rng)], None).unwrap();
        let s = serde_json::to_string(&fam).unwrap();
        let back: MeasurementFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back.questions(), 1);
        assert!(serde_json::from_str::<Operator>(r#"{"dim":2,"entries":[[0,0],[1,0],[0,0],[0,0]]}"#).is_err());
    }
}
