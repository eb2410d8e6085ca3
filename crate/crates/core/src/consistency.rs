//! Consistency metrics between measurement families and sub-measurements
//! over function-valued outcomes, plus global-consistency certificates.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{FieldVector, PrimeField};
use crate::poly::{monomials, MultiPoly, ENUMERATION_LIMIT};
use crate::quantum::{check_dim, identity, BipartiteState, MeasurementFamily, Operator, SubMeasurement, C64};
use crate::sdp::{self, SdpInstance};

pub const STRUCTURE_GUARD: u128 = 100_000_000;
const IMAG_TOL: f64 = 1e-10;

fn real(z: C64) -> f64 {
    debug_assert!(z.im.abs() <= IMAG_TOL * (1.0 + z.re.abs()), "imaginary residue {}", z.im);
    z.re
}

/// Finite family `G` of tabulated functions `X -> A` with its intersection
/// parameter recomputed from the tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StructuredJson", into = "StructuredJson")]
pub struct StructuredFamily {
    questions: usize,
    answers: usize,
    names: Vec<String>,
    tables: Vec<Vec<usize>>,
    kappa: Ratio<u64>,
}

#[derive(Serialize, Deserialize)]
struct FunctionJson {
    name: String,
    table: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct StructuredJson {
    questions: usize,
    answers: usize,
    functions: Vec<FunctionJson>,
    #[serde(default, skip_deserializing)]
    kappa: Option<[u64; 2]>,
}

impl TryFrom<StructuredJson> for StructuredFamily {
    type Error = Error;
    fn try_from(j: StructuredJson) -> Result<Self> {
        StructuredFamily::new(j.questions, j.answers, j.functions.into_iter().map(|f| (f.name, f.table)).collect())
    }
}

impl From<StructuredFamily> for StructuredJson {
    fn from(s: StructuredFamily) -> Self {
        let kappa = Some([*s.kappa.numer(), *s.kappa.denom()]);
        let functions = s.names.into_iter().zip(s.tables).map(|(name, table)| FunctionJson { name, table }).collect();
        StructuredJson { questions: s.questions, answers: s.answers, functions, kappa }
    }
}

impl StructuredFamily {
    pub fn new(questions: usize, answers: usize, functions: Vec<(String, Vec<usize>)>) -> Result<Self> {
        if questions == 0 || answers == 0 || functions.is_empty() {
            return Err(Error::InvalidParams("structured family needs nonempty X, A and G".into()));
        }
        let work = questions as u128 * (functions.len() as u128).pow(2);
        if work > STRUCTURE_GUARD {
            return Err(Error::SearchSpaceTooLarge { size: work, limit: STRUCTURE_GUARD });
        }
        for (name, t) in &functions {
            if t.len() != questions {
                return Err(Error::DimensionMismatch { expected: questions, got: t.len() });
            }
            if t.iter().any(|&a| a >= answers) {
                return Err(Error::InvalidParams(format!("function {name} leaves the answer set")));
            }
        }
        let (names, tables): (Vec<_>, Vec<_>) = functions.into_iter().unzip();
        let kappa = max_agreement(&tables, questions);
        Ok(StructuredFamily { questions, answers, names, tables, kappa })
    }

    /// The `|A|` constant functions, named by their value.
    pub fn constants(questions: usize, answers: usize) -> Result<Self> {
        Self::new(questions, answers, (0..answers).map(|a| (a.to_string(), vec![a; questions])).collect())
    }

    /// All polynomials of total degree `<= d` on `F_q^m`, tabulated on points
    /// in [`FieldVector::enumerate_all`] order with answers as residues.
    pub fn polynomials(field: PrimeField, m: usize, d: u32) -> Result<(Self, Vec<MultiPoly>)> {
        let q = field.modulus() as u128;
        let mons = monomials(m, d);
        let count = q.checked_pow(mons.len() as u32).unwrap_or(u128::MAX);
        if count > ENUMERATION_LIMIT {
            return Err(Error::SearchSpaceTooLarge { size: count, limit: ENUMERATION_LIMIT });
        }
        let points: Vec<FieldVector> = FieldVector::enumerate_all(field, m).collect();
        let mut polys = Vec::with_capacity(count as usize);
        for coeffs in FieldVector::enumerate_all(field, mons.len()) {
            let terms = mons.iter().cloned().zip(coeffs.raw().iter().map(|&v| v as u64)).collect::<Vec<_>>();
            polys.push(MultiPoly::new(field, m, d, terms)?);
        }
        let functions = polys
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok((
                    format!("g{i}"),
                    points.iter().map(|x| Ok(p.evaluate(x)?.value() as usize)).collect::<Result<Vec<_>>>()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((Self::new(points.len(), field.modulus() as usize, functions)?, polys))
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn answers(&self) -> usize {
        self.answers
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn table(&self, g: usize) -> &[usize] {
        &self.tables[g]
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    pub fn kappa(&self) -> Ratio<u64> {
        self.kappa
    }

    pub fn kappa_f64(&self) -> f64 {
        *self.kappa.numer() as f64 / *self.kappa.denom() as f64
    }

    fn check_family(&self, m: &MeasurementFamily) -> Result<()> {
        if m.questions() != self.questions || m.outcomes() != self.answers {
            return Err(Error::ShapeMismatch(format!(
                "family over {}x{} vs functions {}->{}",
                m.questions(),
                m.outcomes(),
                self.questions,
                self.answers
            )));
        }
        Ok(())
    }

    fn check_sub(&self, t: &SubMeasurement) -> Result<()> {
        if t.len() != self.len() {
            return Err(Error::ShapeMismatch(format!("{} outcomes for {} functions", t.len(), self.len())));
        }
        Ok(())
    }
}

fn max_agreement(tables: &[Vec<usize>], questions: usize) -> Ratio<u64> {
    let best = (0..tables.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..tables.len())
                .map(|j| tables[i].iter().zip(&tables[j]).filter(|(a, b)| a == b).count())
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    Ratio::new(best as u64, questions as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub self_consistency: f64,
    pub projectivity: f64,
    pub consistency: f64,
    pub completeness_error: f64,
    pub kappa: f64,
}

impl ConsistencyReport {
    /// Metrics of `T` against `A`: `A`'s self-consistency, `T`'s projectivity,
    /// their consistency, `T`'s completeness error and the family's `kappa`.
    pub fn measure(
        t: &SubMeasurement,
        s: &StructuredFamily,
        a: &MeasurementFamily,
        psi: &BipartiteState,
    ) -> Result<Self> {
        Ok(ConsistencyReport {
            self_consistency: self_consistency(a, psi)?,
            projectivity: sub_projectivity(t, psi)?,
            consistency: cross_consistency(t, s, a, psi)?,
            completeness_error: t.completeness_error(psi),
            kappa: s.kappa_f64(),
        })
    }
}

/// `E_x sum_{a != a'} <M_x^a, M_x^a'>_Psi`.
pub fn self_consistency(m: &MeasurementFamily, psi: &BipartiteState) -> Result<f64> {
    check_dim(m.dim(), psi)?;
    let per_x: Vec<f64> = (0..m.questions())
        .into_par_iter()
        .map(|x| {
            let mut s = 0.0;
            for a in 0..m.outcomes() {
                for b in 0..m.outcomes() {
                    if a != b {
                        s += real(psi.pair(m.op(x, a), m.op(x, b)));
                    }
                }
            }
            m.weight(x) * s
        })
        .collect();
    Ok(per_x.iter().sum())
}

/// `E_x <M_x, Id - M_x>_Psi` with `M_x = sum_a M_x^a`.
pub fn projectivity_defect(m: &MeasurementFamily, psi: &BipartiteState) -> Result<f64> {
    check_dim(m.dim(), psi)?;
    let id = Operator::identity(m.dim());
    Ok((0..m.questions())
        .map(|x| {
            let mx = m.row_sum(x);
            m.weight(x) * real(psi.pair(&mx, &id.sub(&mx)))
        })
        .sum())
}

/// `<T, Id - T>_Psi` for `T = sum_g T^g`.
pub fn sub_projectivity(t: &SubMeasurement, psi: &BipartiteState) -> Result<f64> {
    check_dim(t.dim(), psi)?;
    let total = t.total();
    Ok(real(psi.pair(total, &Operator::identity(t.dim()).sub(total))))
}

/// `sum_{g != g'} <T^g, T^g'>_Psi`.
pub fn sub_self_consistency(t: &SubMeasurement, psi: &BipartiteState) -> Result<f64> {
    check_dim(t.dim(), psi)?;
    let mut s = 0.0;
    for (i, a) in t.operators().iter().enumerate() {
        for (j, b) in t.operators().iter().enumerate() {
            if i != j {
                s += real(psi.pair(a, b));
            }
        }
    }
    Ok(s)
}

/// `E_x sum_g sum_{a != g(x)} <T^g, M_x^a>_Psi`.
pub fn cross_consistency(
    t: &SubMeasurement,
    s: &StructuredFamily,
    m: &MeasurementFamily,
    psi: &BipartiteState,
) -> Result<f64> {
    s.check_family(m)?;
    s.check_sub(t)?;
    check_dim(m.dim(), psi)?;
    check_dim(t.dim(), psi)?;
    let per_x: Vec<f64> = (0..m.questions())
        .into_par_iter()
        .map(|x| {
            let mx = m.row_sum(x);
            let v: f64 = t
                .operators()
                .iter()
                .enumerate()
                .map(|(g, tg)| real(psi.pair(tg, &mx.sub(m.op(x, s.table(g)[x])))))
                .sum();
            m.weight(x) * v
        })
        .collect();
    Ok(per_x.iter().sum())
}

/// `A^g = E_x A_x^{g(x)}`.
pub fn aggregate(m: &MeasurementFamily, g: &[usize]) -> Result<Operator> {
    if g.len() != m.questions() {
        return Err(Error::DimensionMismatch { expected: m.questions(), got: g.len() });
    }
    if g.iter().any(|&a| a >= m.outcomes()) {
        return Err(Error::ShapeMismatch("function value outside the outcome set".into()));
    }
    Ok(g.iter().enumerate().fold(Operator::zero(m.dim()), |acc, (x, &a)| acc.add(&m.op(x, a).scale(m.weight(x)))))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlobalConsistencyCertificate {
    pub epsilon: f64,
    pub delta: f64,
    pub kappa: f64,
    pub z: Operator,
    pub aggregated: Vec<Operator>,
    /// `sup_T sum_g <T^g, A^g - (A^g)^2>_Psi` from the primal side.
    pub primal_value: f64,
    pub gap: f64,
}

impl GlobalConsistencyCertificate {
    /// Re-checks `A^g - (A^g)^2 <= Z + tol Id`, `Z >= -tol Id` and
    /// `<Z, Id>_Psi <= delta + tol`.
    pub fn verify(&self, psi: &BipartiteState, tol: f64) -> bool {
        if self.z.min_eigenvalue() < -tol || psi.local(&self.z).re > self.delta + tol {
            return false;
        }
        self.aggregated.iter().all(|ag| self.z.sub(&ag.idempotence_defect()).min_eigenvalue() >= -tol)
    }
}

/// Self-consistency of `M` plus the minimal-trace `Z` dominating every
/// `A^g - (A^g)^2`.
pub fn certify_global_consistency(
    m: &MeasurementFamily,
    s: &StructuredFamily,
    psi: &BipartiteState,
) -> Result<GlobalConsistencyCertificate> {
    s.check_family(m)?;
    check_dim(m.dim(), psi)?;
    let support = psi.support_dimension();
    if support < psi.dim() {
        return Err(Error::SupportDeficient(format!("reduced density has rank {support} < {}", psi.dim())));
    }
    let epsilon = self_consistency(m, psi)?;
    let aggregated = s.tables().iter().map(|g| aggregate(m, g)).collect::<Result<Vec<_>>>()?;
    let defects: Vec<Operator> = aggregated.iter().map(|ag| clip_psd(&ag.idempotence_defect())).collect();
    let res = sdp::solve(&SdpInstance::new(psi.clone(), defects)?)?;
    Ok(GlobalConsistencyCertificate {
        epsilon,
        delta: res.dual_value,
        kappa: s.kappa_f64(),
        z: res.dual,
        aggregated,
        primal_value: res.primal_value,
        gap: res.gap,
    })
}

/// Removes round-off negativity (at most the PSD floor) from an operator
/// that is positive in exact arithmetic.
fn clip_psd(op: &Operator) -> Operator {
    Operator::from_hermitian_part(&crate::quantum::spectral_map(op.matrix(), |v| v.max(0.0)))
}

/// `E_x sum_a <C^dag C, Id>_Psi` with `C = T A_x^a - A_x^a T`.
pub fn commutation_defect(t: &SubMeasurement, a: &MeasurementFamily, psi: &BipartiteState) -> Result<f64> {
    check_dim(t.dim(), psi)?;
    check_dim(a.dim(), psi)?;
    let tm = t.total().matrix();
    let mut total = 0.0;
    for x in 0..a.questions() {
        let mut row = 0.0;
        for k in 0..a.outcomes() {
            let am = a.op(x, k).matrix();
            let comm = tm * am - am * tm;
            row += real(psi.local(&(comm.adjoint() * &comm)));
        }
        total += a.weight(x) * row;
    }
    Ok(total)
}

/// `|sum_g <A^g, R^g>_Psi - sum_g <Id, R^g A^g>_Psi|`.
pub fn ordering_gap(
    a: &MeasurementFamily,
    s: &StructuredFamily,
    r: &SubMeasurement,
    psi: &BipartiteState,
) -> Result<f64> {
    s.check_family(a)?;
    s.check_sub(r)?;
    check_dim(a.dim(), psi)?;
    let id = identity(a.dim());
    let mut lhs = C64::new(0.0, 0.0);
    let mut rhs = C64::new(0.0, 0.0);
    for (g, rg) in r.operators().iter().enumerate() {
        let ag = aggregate(a, s.table(g))?;
        lhs += psi.pair(&ag, rg);
        rhs += psi.pair(&id, &(rg.matrix() * ag.matrix()));
    }
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{c, maximally_entangled, random_projective_measurement, random_unitary, CMat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_family(rows: &[Vec<Vec<f64>>]) -> MeasurementFamily {
        MeasurementFamily::new(rows.iter().map(|r| r.iter().map(|d| Operator::diagonal(d)).collect()).collect(), None)
            .unwrap()
    }

    /// `U P^a U^dag` for the computational projectors, per `x` rotated by
    /// `exp(i eta H_x)`.
    pub(crate) fn perturbed_family(dim: usize, outcomes: usize, nx: usize, eta: f64, seed: u64) -> MeasurementFamily {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = crate::quantum::projective_from_basis(&identity(dim), outcomes);
        let rows = (0..nx)
            .map(|_| {
                let h = crate::quantum::random_hermitian(dim, &mut rng);
                let u = crate::quantum::unitary_exp(&h, eta);
                base.iter().map(|p| Operator::from_hermitian_part(&(&u * p.matrix() * u.adjoint()))).collect()
            })
            .collect();
        MeasurementFamily::new(rows, None).unwrap()
    }

    #[test]
    fn self_consistency_examples() {
        let me = maximally_entangled(2);
        let proj = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]]);
        assert!(self_consistency(&proj, &me).unwrap().abs() < 1e-15);
        let half = diag_family(&[vec![vec![0.5, 0.5], vec![0.5, 0.5]]]);
        assert!((self_consistency(&half, &me).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projectivity_examples() {
        let me = maximally_entangled(2);
        let proj = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]]]);
        assert!(projectivity_defect(&proj, &me).unwrap().abs() < 1e-15);
        let half = diag_family(&[vec![vec![0.5, 0.5]]]);
        assert!((projectivity_defect(&half, &me).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cross_consistency_counts_disagreements() {
        let me = maximally_entangled(2);
        // four questions, answers in {0,1}; deterministic family from g' = (0,1,1,1)
        let gp = [0usize, 1, 1, 1];
        let rows: Vec<Vec<Vec<f64>>> = gp
            .iter()
            .map(|&a| if a == 0 { vec![vec![1.0, 1.0], vec![0.0, 0.0]] } else { vec![vec![0.0, 0.0], vec![1.0, 1.0]] })
            .collect();
        let fam = diag_family(&rows);
        let s = StructuredFamily::new(4, 2, vec![("g".into(), vec![0, 0, 1, 1])]).unwrap();
        let t = SubMeasurement::indexed(vec![Operator::identity(2)]).unwrap();
        assert!((cross_consistency(&t, &s, &fam, &me).unwrap() - 0.25).abs() < 1e-15);
        let same = StructuredFamily::new(4, 2, vec![("g".into(), gp.to_vec())]).unwrap();
        assert!(cross_consistency(&t, &same, &fam, &me).unwrap().abs() < 1e-15);
    }

    #[test]
    fn cross_consistency_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = BipartiteState::random(3, &mut rng);
        let fam = MeasurementFamily::new((0..4).map(|_| random_projective_measurement(3, 3, &mut rng)).collect(), None)
            .unwrap();
        let s =
            StructuredFamily::new(4, 3, vec![("a".into(), vec![0, 1, 2, 0]), ("b".into(), vec![2, 2, 1, 0])]).unwrap();
        let t = SubMeasurement::indexed(
            random_projective_measurement(3, 3, &mut rng).into_iter().take(2).map(|o| o.scale(0.9)).collect(),
        )
        .unwrap();
        let mut naive = C64::new(0.0, 0.0);
        for x in 0..4 {
            for g in 0..2 {
                for a in 0..3 {
                    if a != s.table(g)[x] {
                        naive += psi.pair(t.operator(g), fam.op(x, a)) * c(0.25);
                    }
                }
            }
        }
        assert!((cross_consistency(&t, &s, &fam, &psi).unwrap() - naive.re).abs() < 1e-12);
    }

    #[test]
    fn aggregate_examples() {
        let fam = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]]);
        let ag = aggregate(&fam, &[1, 1]).unwrap();
        assert!(crate::quantum::max_abs(&(ag.matrix() - Operator::diagonal(&[0.0, 1.0]).matrix())) < 1e-15);
        let mixed = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]]);
        let ag = aggregate(&mixed, &[0, 0]).unwrap();
        assert!(crate::quantum::max_abs(&(ag.matrix() - Operator::diagonal(&[0.5, 0.5]).matrix())) < 1e-15);
    }

    #[test]
    fn kappa_is_recomputed() {
        let s = StructuredFamily::new(3, 2, vec![("a".into(), vec![0, 0, 1]), ("b".into(), vec![0, 1, 1])]).unwrap();
        assert_eq!(s.kappa(), Ratio::new(2, 3));
        let (lines, _) = StructuredFamily::polynomials(PrimeField::new(5).unwrap(), 1, 1).unwrap();
        assert_eq!(lines.len(), 25);
        assert_eq!(lines.kappa(), Ratio::new(1, 5));
    }

    #[test]
    fn certificate_examples() {
        let me = maximally_entangled(2);
        let proj = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]]);
        let consts = StructuredFamily::constants(2, 2).unwrap();
        let cert = certify_global_consistency(&proj, &consts, &me).unwrap();
        assert!(cert.delta <= 1e-8);
        assert!(cert.verify(&me, 1e-8));

        let half = diag_family(&[vec![vec![0.5, 0.5], vec![0.5, 0.5]]]);
        let s = StructuredFamily::new(1, 2, vec![("0".into(), vec![0]), ("1".into(), vec![1])]).unwrap();
        let cert = certify_global_consistency(&half, &s, &me).unwrap();
        assert!((cert.delta - 0.25).abs() < 1e-8);
        assert!(crate::quantum::max_abs(&(cert.z.matrix() - identity(2) * c(0.25))) < 1e-6);
    }

    #[test]
    fn certificate_duality_on_random_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = BipartiteState::random(3, &mut rng);
        let fam = perturbed_family(3, 3, 4, 0.3, 99);
        let s =
            StructuredFamily::new(4, 3, vec![("a".into(), vec![0, 1, 2, 0]), ("b".into(), vec![1, 1, 1, 1])]).unwrap();
        let cert = certify_global_consistency(&fam, &s, &psi).unwrap();
        assert!((cert.delta - cert.primal_value).abs() <= 1e-6);
        assert!(cert.verify(&psi, 1e-8));
        let _ = random_unitary(2, &mut rng);
    }

    #[test]
    fn certify_rejects_rank_deficient_state() {
        let m = CMat::from_fn(2, 2, |r, k| if r == 0 && k == 0 { c(1.0) } else { c(0.0) });
        let psi = BipartiteState::new(m).unwrap();
        let proj = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]]]);
        let s = StructuredFamily::constants(1, 2).unwrap();
        assert!(matches!(certify_global_consistency(&proj, &s, &psi), Err(Error::SupportDeficient(_))));
    }

    #[test]
    fn exact_point_properties() {
        // x-independent projective family, constant functions, T^g = P^g
        let me = maximally_entangled(4);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ps = crate::quantum::random_real_projective_measurement(4, 2, &mut rng);
        let fam = MeasurementFamily::new(vec![ps.clone(), ps.clone(), ps.clone()], None).unwrap();
        let s = StructuredFamily::constants(3, 2).unwrap();
        let t = SubMeasurement::indexed(ps).unwrap();
        assert!(self_consistency(&fam, &me).unwrap().abs() < 1e-12);
        assert!(cross_consistency(&t, &s, &fam, &me).unwrap().abs() < 1e-12);
        assert!(sub_self_consistency(&t, &me).unwrap().abs() < 1e-9);
        assert!(commutation_defect(&t, &fam, &me).unwrap() < 1e-9);
        assert!(ordering_gap(&fam, &s, &t, &me).unwrap() < 1e-10);
    }

    #[test]
    fn commutation_defect_of_commuting_diagonals() {
        let me = maximally_entangled(2);
        let fam = diag_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]]]);
        let t = SubMeasurement::indexed(vec![Operator::diagonal(&[0.3, 0.7])]).unwrap();
        assert!(commutation_defect(&t, &fam, &me).unwrap().abs() < 1e-15);
    }

    #[test]
    fn commutation_defect_vanishes_with_perturbation() {
        let me = maximally_entangled(3);
        let t = SubMeasurement::indexed(vec![Operator::diagonal(&[1.0, 0.0, 0.0])]).unwrap();
        let vals: Vec<f64> = [0.2, 0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&eta| commutation_defect(&t, &perturbed_family(3, 3, 3, eta, 5), &me).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn ordering_gap_trend_and_zero_r() {
        let me = maximally_entangled(3);
        let s = StructuredFamily::constants(3, 3).unwrap();
        let r = SubMeasurement::indexed(vec![Operator::zero(3); 3]).unwrap();
        assert_eq!(ordering_gap(&perturbed_family(3, 3, 3, 0.2, 6), &s, &r, &me).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rr = SubMeasurement::indexed(random_projective_measurement(3, 3, &mut rng)).unwrap();
        let gaps: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&eta| ordering_gap(&perturbed_family(3, 3, 3, eta, 6), &s, &rr, &me).unwrap())
            .collect();
        let eps: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&eta| self_consistency(&perturbed_family(3, 3, 3, eta, 6), &me).unwrap())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
        for (g, e) in gaps.iter().zip(&eps) {
            assert!(*g <= 10.0 * e.sqrt() + 1e-12, "gap {g} eps {e}");
        }
    }

    #[test]
    fn structured_json_round_trip() {
        let s = StructuredFamily::constants(2, 3).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"kappa\":[0,1]"));
        let back: StructuredFamily = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let report = ConsistencyReport {
            self_consistency: 0.0,
            projectivity: 0.0,
            consistency: 0.0,
            completeness_error: 0.0,
            kappa: 0.0,
        };
        let js = serde_json::to_value(report).unwrap();
        assert!(js.as_object().unwrap().values().all(|v| v.is_number()));
    }
}
