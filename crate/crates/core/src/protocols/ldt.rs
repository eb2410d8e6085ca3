use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{linearly_independent, FieldVector, PrimeField};
use crate::poly::{canonical_plane, restrict, AffinePlane, BivariateRestriction, MultiPoly};
use crate::rng::{binomial_stderr, trial_rng};

/// Guard on `q^{3m}` for the exhaustive mode.
pub const LDT_EXHAUSTIVE_LIMIT: u128 = 10_000_000;
/// Guard on `q^m` for tabulated point answers.
pub const POINT_TABLE_LIMIT: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LdtParamsJson", into = "LdtParamsJson")]
pub struct LdtParams {
    d: u32,
    m: usize,
    field: PrimeField,
}

#[derive(Serialize, Deserialize)]
struct LdtParamsJson {
    d: u32,
    m: usize,
    q: u32,
}

impl TryFrom<LdtParamsJson> for LdtParams {
    type Error = Error;
    fn try_from(j: LdtParamsJson) -> Result<Self> {
        LdtParams::new(j.d, j.m, j.q)
    }
}

impl From<LdtParams> for LdtParamsJson {
    fn from(p: LdtParams) -> Self {
        LdtParamsJson { d: p.d, m: p.m, q: p.q() }
    }
}

/// Sizes of questions and answers, in bits and field elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdtSizes {
    pub element_bits: u32,
    pub point_question_bits: u32,
    pub plane_question_bits: u32,
    pub plane_answer_elements: u32,
    pub plane_answer_bits: u32,
    pub point_answer_bits: u32,
}

impl LdtParams {
    pub fn new(d: u32, m: usize, q: u32) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if q <= d {
            return Err(Error::InvalidParams(format!("need q > d (q = {q}, d = {d})")));
        }
        if m < 2 {
            return Err(Error::InvalidParams(format!("need m >= 2 (m = {m})")));
        }
        Ok(LdtParams { d, m, field })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> u32 {
        self.field.modulus()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// `q / (d m / epsilon)^c`: at least 1 when the soundness hypothesis on
    /// the field size holds. Reported, never enforced.
    pub fn soundness_ratio(&self, epsilon: f64, c: f64) -> f64 {
        self.q() as f64 / (self.d.max(1) as f64 * self.m as f64 / epsilon).powf(c)
    }

    pub fn sizes(&self) -> LdtSizes {
        let element_bits = 32 - (self.q() - 1).leading_zeros();
        let m = self.m as u32;
        let plane_answer_elements = (self.d + 1) * (self.d + 2) / 2;
        LdtSizes {
            element_bits,
            point_question_bits: m * element_bits,
            plane_question_bits: 3 * m * element_bits,
            plane_answer_elements,
            plane_answer_bits: plane_answer_elements * element_bits,
            point_answer_bits: element_bits,
        }
    }

    /// Number of `(x, y1, y2)` triples.
    pub fn exhaustive_size(&self) -> u128 {
        (self.q() as u128).checked_pow(3 * self.m as u32).unwrap_or(u128::MAX)
    }

    fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldVector {
        let q = self.q();
        FieldVector::new(self.field, (0..self.m).map(|_| rng.gen_range(0..q) as u64)).expect("entries reduced")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LdtRound {
    /// Directions are linearly dependent: accepted without querying.
    Dependent {
        x: FieldVector,
        y1: FieldVector,
        y2: FieldVector,
    },
    Play {
        x: FieldVector,
        plane: AffinePlane,
        coords: (u32, u32),
    },
}

impl LdtRound {
    pub fn point(&self) -> &FieldVector {
        match self {
            LdtRound::Dependent { x, .. } | LdtRound::Play { x, .. } => x,
        }
    }
}

fn round_from(x: FieldVector, y1: FieldVector, y2: FieldVector) -> Result<LdtRound> {
    if !linearly_independent(&y1, &y2)? {
        return Ok(LdtRound::Dependent { x, y1, y2 });
    }
    let plane = canonical_plane(&x, &y1, &y2)?;
    let coords = plane.coordinates(&x).expect("x lies on its own plane");
    Ok(LdtRound::Play { x, plane, coords })
}

/// Draws `x, y1, y2` uniformly from `F_q^m`.
pub fn ldt_sample_round<R: Rng + ?Sized>(params: &LdtParams, rng: &mut R) -> LdtRound {
    let x = params.random_vector(rng);
    let y1 = params.random_vector(rng);
    let y2 = params.random_vector(rng);
    round_from(x, y1, y2).expect("vectors share one field and length")
}

/// Answer functions of the two provers: the plane prover (Alice) and the
/// point prover (Bob).
pub trait LdtOracle: Sync {
    fn plane(&self, s: &AffinePlane) -> Result<BivariateRestriction>;
    fn point(&self, x: &FieldVector) -> Result<u32>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlaneAnswers {
    /// The restriction of a fixed polynomial.
    Restriction {
        poly: MultiPoly,
    },
    Constant {
        value: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointAnswers {
    Evaluation {
        poly: MultiPoly,
    },
    Constant {
        value: u32,
    },
    /// One value per point of `F_q^m`, last coordinate varying fastest.
    Table {
        values: Vec<u32>,
    },
}

/// A deterministic strategy pair described as data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdtStrategy {
    pub plane: PlaneAnswers,
    pub point: PointAnswers,
}

fn check_poly(params: &LdtParams, g: &MultiPoly) -> Result<()> {
    if g.field() != params.field() {
        return Err(Error::ModulusMismatch(g.field().modulus(), params.q()));
    }
    if g.num_vars() != params.m() {
        return Err(Error::DimensionMismatch { expected: params.m(), got: g.num_vars() });
    }
    Ok(())
}

impl LdtStrategy {
    /// Checks that every answer is well formed for `params`.
    pub fn validate(&self, params: &LdtParams) -> Result<()> {
        let q = params.q();
        match &self.plane {
            PlaneAnswers::Restriction { poly } => check_poly(params, poly)?,
            PlaneAnswers::Constant { value } if *value >= q => {
                return Err(Error::InvalidParams(format!("plane constant {value} not reduced mod {q}")));
            }
            PlaneAnswers::Constant { .. } => {}
        }
        match &self.point {
            PointAnswers::Evaluation { poly } => check_poly(params, poly)?,
            PointAnswers::Constant { value } if *value >= q => {
                return Err(Error::InvalidParams(format!("point constant {value} not reduced mod {q}")));
            }
            PointAnswers::Constant { .. } => {}
            PointAnswers::Table { values } => {
                let expected = (q as u128).pow(params.m() as u32);
                if values.len() as u128 != expected {
                    return Err(Error::CoverageGap(format!("point table has {} of {expected} entries", values.len())));
                }
                if let Some(v) = values.iter().find(|&&v| v >= q) {
                    return Err(Error::InvalidParams(format!("point table entry {v} not reduced mod {q}")));
                }
            }
        }
        Ok(())
    }
}

impl LdtOracle for LdtStrategy {
    fn plane(&self, s: &AffinePlane) -> Result<BivariateRestriction> {
        match &self.plane {
            PlaneAnswers::Restriction { poly } => restrict(poly, s),
            PlaneAnswers::Constant { value } => Ok(BivariateRestriction::constant(s.field(), 0, *value as u64)),
        }
    }

    fn point(&self, x: &FieldVector) -> Result<u32> {
        match &self.point {
            PointAnswers::Evaluation { poly } => Ok(poly.evaluate(x)?.value()),
            PointAnswers::Constant { value } => Ok(*value),
            PointAnswers::Table { values } => {
                let q = x.modulus() as usize;
                let idx = x.raw().iter().fold(0usize, |acc, &v| acc * q + v as usize);
                values.get(idx).copied().ok_or_else(|| Error::CoverageGap(format!("no point answer for {x}")))
            }
        }
    }
}

/// Plane answers `restrict(g, s)`, point answers `g(x)`.
pub fn honest_ldt_strategy(params: &LdtParams, g: &MultiPoly) -> Result<LdtStrategy> {
    check_poly(params, g)?;
    if g.total_degree() > params.d() {
        return Err(Error::DegreeViolation { degree: g.total_degree(), bound: params.d() });
    }
    Ok(LdtStrategy {
        plane: PlaneAnswers::Restriction { poly: g.clone() },
        point: PointAnswers::Evaluation { poly: g.clone() },
    })
}

/// Honest plane answers for `g`, Bob answering `value` everywhere.
pub fn constant_bob_strategy(params: &LdtParams, g: &MultiPoly, value: u32) -> Result<LdtStrategy> {
    let mut s = honest_ldt_strategy(params, g)?;
    s.point = PointAnswers::Constant { value: params.field().elem(value as u64).value() };
    Ok(s)
}

/// Plane answers from `g`, point answers from `h`.
pub fn mismatched_strategy(params: &LdtParams, g: &MultiPoly, h: &MultiPoly) -> Result<LdtStrategy> {
    let s = honest_ldt_strategy(params, g)?;
    check_poly(params, h)?;
    Ok(LdtStrategy { plane: s.plane, point: PointAnswers::Evaluation { poly: h.clone() } })
}

/// Plane answers from `g`, point answers from a uniformly random function
/// drawn from `seed`.
pub fn random_function_strategy(params: &LdtParams, g: &MultiPoly, seed: u64) -> Result<LdtStrategy> {
    let s = honest_ldt_strategy(params, g)?;
    let size = (params.q() as u128).checked_pow(params.m() as u32).unwrap_or(u128::MAX);
    if size > POINT_TABLE_LIMIT {
        return Err(Error::DomainTooLarge { size, limit: POINT_TABLE_LIMIT });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..size).map(|_| rng.gen_range(0..params.q())).collect();
    Ok(LdtStrategy { plane: s.plane, point: PointAnswers::Table { values } })
}

/// Verdict of one round; `None` when it was accepted without querying.
fn verdict(params: &LdtParams, oracle: &dyn LdtOracle, round: &LdtRound) -> Result<Option<(u32, u32, bool)>> {
    match round {
        LdtRound::Dependent { .. } => Ok(None),
        LdtRound::Play { x, plane, coords } => {
            let h = oracle.plane(plane)?;
            let a = oracle.point(x)?;
            let g_x = h.evaluate_raw(coords.0, coords.1);
            Ok(Some((g_x, a, h.total_degree() <= params.d() && g_x == a)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdtStats {
    pub trials: u64,
    pub accepted: u64,
    pub dependent: u64,
    pub acceptance: f64,
    pub stderr: f64,
    pub dependent_rate: f64,
}

/// Runs `trials` rounds; round `i` draws from stream `i` of `seed`.
pub fn ldt_run(params: &LdtParams, oracle: &dyn LdtOracle, trials: u64, seed: u64) -> Result<LdtStats> {
    let (accepted, dependent) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let round = ldt_sample_round(params, &mut trial_rng(seed, i));
            Ok::<_, Error>(match verdict(params, oracle, &round)? {
                None => (1u64, 1u64),
                Some((_, _, ok)) => (u64::from(ok), 0),
            })
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let acceptance = if trials == 0 { 0.0 } else { accepted as f64 / trials as f64 };
    Ok(LdtStats {
        trials,
        accepted,
        dependent,
        acceptance,
        stderr: binomial_stderr(acceptance, trials),
        dependent_rate: if trials == 0 { 0.0 } else { dependent as f64 / trials as f64 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdtExact {
    pub total: u64,
    pub accepted: u64,
    pub dependent: u64,
    pub acceptance: Ratio<u64>,
    pub dependence: Ratio<u64>,
}

/// Exact acceptance probability by enumerating every `(x, y1, y2)`.
pub fn ldt_exact(params: &LdtParams, oracle: &dyn LdtOracle) -> Result<LdtExact> {
    let total = params.exhaustive_size();
    if total > LDT_EXHAUSTIVE_LIMIT {
        return Err(Error::DomainTooLarge { size: total, limit: LDT_EXHAUSTIVE_LIMIT });
    }
    let points: Vec<FieldVector> = FieldVector::enumerate_all(params.field(), params.m()).collect();
    let n = points.len();
    let (accepted, dependent) = (0..n * n)
        .into_par_iter()
        .map(|pair| {
            let (y1, y2) = (&points[pair / n], &points[pair % n]);
            let mut acc = (0u64, 0u64);
            for x in &points {
                match verdict(params, oracle, &round_from(x.clone(), y1.clone(), y2.clone())?)? {
                    None => {
                        acc.0 += 1;
                        acc.1 += 1;
                    }
                    Some((_, _, ok)) => acc.0 += u64::from(ok),
                }
            }
            Ok::<_, Error>(acc)
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let total = total as u64;
    Ok(LdtExact {
        total,
        accepted,
        dependent,
        acceptance: Ratio::new(accepted, total),
        dependence: Ratio::new(dependent, total),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdtTranscriptRow {
    pub round: u64,
    pub point: String,
    pub plane: String,
    pub dependent: bool,
    pub plane_value: Option<u32>,
    pub point_answer: Option<u32>,
    pub accepted: bool,
}

fn describe_plane(s: &AffinePlane) -> String {
    format!("{}+<{},{}>", s.base_point(), s.basis()[0], s.basis()[1])
}

/// The first `rounds` rounds of the run with the same seed, in order.
pub fn ldt_transcript(
    params: &LdtParams,
    oracle: &dyn LdtOracle,
    rounds: u64,
    seed: u64,
) -> Result<Vec<LdtTranscriptRow>> {
    (0..rounds)
        .map(|i| {
            let round = ldt_sample_round(params, &mut trial_rng(seed, i));
            let v = verdict(params, oracle, &round)?;
            Ok(LdtTranscriptRow {
                round: i,
                point: round.point().to_string(),
                plane: match &round {
                    LdtRound::Play { plane, .. } => describe_plane(plane),
                    LdtRound::Dependent { .. } => String::new(),
                },
                dependent: v.is_none(),
                plane_value: v.map(|t| t.0),
                point_answer: v.map(|t| t.1),
                accepted: v.is_none_or(|t| t.2),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::agreement_fraction;

    fn params(d: u32, m: usize, q: u32) -> LdtParams {
        LdtParams::new(d, m, q).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(LdtParams::new(1, 2, 6), Err(Error::NotPrime(6))));
        assert!(LdtParams::new(5, 2, 5).is_err());
        assert!(LdtParams::new(1, 1, 5).is_err());
        let p = params(2, 3, 11);
        assert_eq!(p.sizes().plane_answer_elements, 6);
        assert_eq!(p.sizes().element_bits, 4);
        assert!(p.soundness_ratio(0.1, 1.0) < 1.0);
    }

    #[test]
    fn two_variables_have_one_plane() {
        let p = params(1, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut planes = std::collections::BTreeSet::new();
        for _ in 0..200 {
            if let LdtRound::Play { x, plane, .. } = ldt_sample_round(&p, &mut rng) {
                assert!(plane.contains(&x));
                planes.insert(plane);
            }
        }
        assert_eq!(planes.len(), 1);
    }

    #[test]
    fn sampled_point_lies_on_plane() {
        let p = params(2, 4, 7);
        for i in 0..500 {
            if let LdtRound::Play { x, plane, coords } = ldt_sample_round(&p, &mut trial_rng(3, i)) {
                assert_eq!(plane.coordinates(&x), Some(coords));
            }
        }
    }

    #[test]
    fn dependence_probability_matches_count() {
        // independent ordered pairs: (q^m - 1)(q^m - q)
        let p = params(1, 2, 5);
        let g = MultiPoly::zero(p.field(), 2, 1);
        let exact = ldt_exact(&p, &honest_ldt_strategy(&p, &g).unwrap()).unwrap();
        let pairs = 625u64;
        let dependent_pairs = pairs - 24 * 20;
        assert_eq!(exact.dependence, Ratio::new(dependent_pairs, pairs));
        assert_eq!(exact.acceptance, Ratio::from_integer(1));
        let stats = ldt_run(&p, &honest_ldt_strategy(&p, &g).unwrap(), 20_000, 9).unwrap();
        let target = dependent_pairs as f64 / pairs as f64;
        let se = binomial_stderr(target, 20_000);
        assert!((stats.dependent_rate - target).abs() <= 4.0 * se);
    }

    #[test]
    fn honest_strategy_is_consistent_on_every_plane() {
        let p = params(2, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = MultiPoly::random(p.field(), 3, 2, &mut rng);
        let s = honest_ldt_strategy(&p, &g).unwrap();
        let mut checked = 0;
        while checked < 200 {
            if let LdtRound::Play { plane, .. } = ldt_sample_round(&p, &mut rng) {
                let h = s.plane(&plane).unwrap();
                for ((t1, t2), pt) in plane.points() {
                    assert_eq!(h.evaluate_raw(t1, t2), s.point(&pt).unwrap());
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn zero_polynomial_answers_zero() {
        let p = params(2, 3, 7);
        let g = MultiPoly::zero(p.field(), 3, 2);
        let s = honest_ldt_strategy(&p, &g).unwrap();
        for i in 0..50 {
            if let LdtRound::Play { x, plane, .. } = ldt_sample_round(&p, &mut trial_rng(0, i)) {
                assert_eq!(s.point(&x).unwrap(), 0);
                assert!(s.plane(&plane).unwrap().graded_coefficients().iter().all(|&(_, c)| c == 0));
            }
        }
    }

    #[test]
    fn honest_run_accepts_every_round() {
        let p = params(2, 3, 11);
        let g = MultiPoly::random(p.field(), 3, 2, &mut ChaCha8Rng::seed_from_u64(5));
        let stats = ldt_run(&p, &honest_ldt_strategy(&p, &g).unwrap(), 2000, 1).unwrap();
        assert_eq!(stats.accepted, stats.trials);
    }

    #[test]
    fn degree_violation_is_rejected() {
        let p = params(1, 2, 5);
        let g = MultiPoly::new(p.field(), 2, 2, [(vec![2, 0], 1)]).unwrap();
        assert!(matches!(honest_ldt_strategy(&p, &g), Err(Error::DegreeViolation { .. })));
    }

    /// Independent oracle: on `m = 2` the plane is the whole space and the
    /// test reduces to `Pr[g(x) = a(x)]` over non-degenerate rounds.
    #[test]
    fn exhaustive_matches_agreement_on_the_plane() {
        let p = params(1, 2, 5);
        let g = MultiPoly::new(p.field(), 2, 1, [(vec![1, 0], 1), (vec![0, 1], 2), (vec![0, 0], 3)]).unwrap();
        let h = MultiPoly::new(p.field(), 2, 1, [(vec![1, 0], 1), (vec![0, 0], 1)]).unwrap();
        let exact = ldt_exact(&p, &mismatched_strategy(&p, &g, &h).unwrap()).unwrap();
        let agree = agreement_fraction(&g, &h).unwrap();
        let dep = exact.dependence;
        assert_eq!(exact.acceptance, dep + (Ratio::from_integer(1) - dep) * agree);
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let p = params(1, 2, 5);
        let g = MultiPoly::random(p.field(), 2, 1, &mut ChaCha8Rng::seed_from_u64(4));
        let s = random_function_strategy(&p, &g, 11).unwrap();
        let a = ldt_run(&p, &s, 3000, 17).unwrap();
        let b = ldt_run(&p, &s, 3000, 17).unwrap();
        assert_eq!(a, b);
        let t = ldt_transcript(&p, &s, 50, 17).unwrap();
        assert_eq!(t.len(), 50);
        assert_eq!(t, ldt_transcript(&p, &s, 50, 17).unwrap());
    }

    #[test]
    fn strategy_json_round_trip() {
        let p = params(1, 2, 5);
        let g = MultiPoly::random(p.field(), 2, 1, &mut ChaCha8Rng::seed_from_u64(4));
        let s = random_function_strategy(&p, &g, 2).unwrap();
        let back: LdtStrategy = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        back.validate(&p).unwrap();
        let short = LdtStrategy { plane: s.plane.clone(), point: PointAnswers::Table { values: vec![0; 3] } };
        assert!(matches!(short.validate(&p), Err(Error::CoverageGap(_))));
    }
}
