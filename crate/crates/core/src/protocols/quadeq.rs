use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{answer_trim, bit_string, parity, trim_strategy};
use crate::error::{Error, Result};
use crate::game::{oracle_strategy, oracularize, ClassicalStrategy, GameSpec, Prob, ThreeQueryTest};
use crate::rng::{binomial_stderr, trial_rng};

/// `n^2` must fit the 128-bit query encoding.
pub const QUADEQ_MAX_VARS: usize = 10;
pub const QUADEQ_MAX_EQUATIONS: usize = 63;
/// Exact evaluation tabulates the `n^2`-bit oracle and enumerates `2^K`.
pub const QUADEQ_EXACT_MAX_VARS: usize = 4;
pub const QUADEQ_EXACT_MAX_EQUATIONS: usize = 20;
/// The explicit game lists every triple of the `n^2`-bit linearity test.
pub const QUADEQ_EXPLICIT_MAX_VARS: usize = 2;

/// A system `x^T a^(k) x = c^(k)` over `F_2`. Matrices are stored as `n^2`
/// bits with entry `(i, j)` at bit `i * n + j`; vectors as bits `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QuadeqJson", into = "QuadeqJson")]
pub struct QuadeqInstance {
    n: usize,
    forms: Vec<u128>,
    constants: Vec<bool>,
    witness: Option<u128>,
}

#[derive(Serialize, Deserialize)]
struct EquationJson {
    /// Rows of `a^(k)` as bit strings.
    a: Vec<String>,
    c: u8,
}

#[derive(Serialize, Deserialize)]
struct QuadeqJson {
    n: usize,
    equations: Vec<EquationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

fn parse_bits(s: &str, len: usize) -> Result<u128> {
    if s.len() != len {
        return Err(Error::Parse(format!("bit string '{s}' has length {}, expected {len}", s.len())));
    }
    s.chars().enumerate().try_fold(0u128, |acc, (i, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << i),
        _ => Err(Error::Parse(format!("'{ch}' in bit string '{s}'"))),
    })
}

impl TryFrom<QuadeqJson> for QuadeqInstance {
    type Error = Error;
    fn try_from(j: QuadeqJson) -> Result<Self> {
        if j.n == 0 || j.n > QUADEQ_MAX_VARS {
            return Err(Error::InvalidParams(format!("n = {} outside 1..={QUADEQ_MAX_VARS}", j.n)));
        }
        let mut forms = Vec::with_capacity(j.equations.len());
        let mut constants = Vec::with_capacity(j.equations.len());
        for eq in &j.equations {
            if eq.a.len() != j.n {
                return Err(Error::Parse(format!("matrix has {} rows, expected {}", eq.a.len(), j.n)));
            }
            let mut a = 0u128;
            for (i, row) in eq.a.iter().enumerate() {
                a |= parse_bits(row, j.n)? << (i * j.n);
            }
            if eq.c > 1 {
                return Err(Error::Parse(format!("constant {} is not a bit", eq.c)));
            }
            forms.push(a);
            constants.push(eq.c == 1);
        }
        let witness = j.witness.as_deref().map(|w| parse_bits(w, j.n)).transpose()?;
        QuadeqInstance::new(j.n, forms, constants, witness)
    }
}

impl From<QuadeqInstance> for QuadeqJson {
    fn from(inst: QuadeqInstance) -> Self {
        let n = inst.n;
        let equations = inst
            .forms
            .iter()
            .zip(&inst.constants)
            .map(|(&a, &c)| EquationJson { a: (0..n).map(|i| bit_string(a >> (i * n), n)).collect(), c: u8::from(c) })
            .collect();
        QuadeqJson { n, equations, witness: inst.witness.map(|w| bit_string(w, n)) }
    }
}

/// `x (x) y` with bit `i * n + j` equal to `x_i y_j`.
pub fn tensor(n: usize, x: u128, y: u128) -> u128 {
    let mut out = 0u128;
    for i in 0..n {
        if (x >> i) & 1 == 1 {
            out |= (y & mask(n)) << (i * n);
        }
    }
    out
}

fn mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

impl QuadeqInstance {
    pub fn new(n: usize, forms: Vec<u128>, constants: Vec<bool>, witness: Option<u128>) -> Result<Self> {
        if n == 0 || n % 2 == 1 {
            return Err(Error::InvalidParams(format!("n = {n} must be positive and even")));
        }
        if n > QUADEQ_MAX_VARS {
            return Err(Error::InvalidParams(format!("n = {n} exceeds {QUADEQ_MAX_VARS}")));
        }
        if forms.is_empty() || forms.len() != constants.len() || forms.len() > QUADEQ_MAX_EQUATIONS {
            return Err(Error::InvalidParams(format!(
                "need 1..={QUADEQ_MAX_EQUATIONS} equations with one constant each ({} forms, {} constants)",
                forms.len(),
                constants.len()
            )));
        }
        if forms.iter().any(|&a| a & !mask(n * n) != 0) || witness.is_some_and(|w| w & !mask(n) != 0) {
            return Err(Error::InvalidParams("bits outside the declared size".into()));
        }
        let inst = QuadeqInstance { n, forms, constants, witness };
        if let Some(w) = witness {
            if let Some(k) = inst.violations(w).iter().position(|&v| v) {
                return Err(Error::InvalidParams(format!("witness violates equation {k}")));
            }
        }
        Ok(inst)
    }

    /// Random forms with constants chosen so that a random `x` satisfies all.
    pub fn satisfiable(n: usize, k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rng.gen::<u128>() & mask(n);
        let forms: Vec<u128> = (0..k).map(|_| rng.gen::<u128>() & mask(n * n)).collect();
        let constants = forms.iter().map(|&a| parity(a & tensor(n, x, x))).collect();
        Self::new(n, forms, constants, Some(x))
    }

    /// Random forms where equation 1 repeats equation 0 with the opposite
    /// constant, so no assignment satisfies the system.
    pub fn contradictory(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams("a contradictory system needs at least two equations".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut forms: Vec<u128> = (0..k).map(|_| rng.gen::<u128>() & mask(n * n)).collect();
        let mut constants: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        forms[1] = forms[0];
        constants[1] = !constants[0];
        Self::new(n, forms, constants, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn equations(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[u128] {
        &self.forms
    }

    pub fn constants(&self) -> &[bool] {
        &self.constants
    }

    pub fn witness(&self) -> Option<u128> {
        self.witness
    }

    /// Equation `k` is violated by `x`.
    pub fn violations(&self, x: u128) -> Vec<bool> {
        let xx = tensor(self.n, x, x);
        self.forms.iter().zip(&self.constants).map(|(&a, &c)| parity(a & xx) != c).collect()
    }

    /// `(sum_k v_k a^(k), sum_k v_k c^(k))`.
    pub fn combination(&self, v: u64) -> (u128, bool) {
        let mut w = 0u128;
        let mut t = false;
        for (k, (&a, &c)) in self.forms.iter().zip(&self.constants).enumerate() {
            if (v >> k) & 1 == 1 {
                w ^= a;
                t ^= c;
            }
        }
        (w, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadeqLabel {
    /// First half of the variables.
    L1,
    /// Second half of the variables.
    L2,
    /// All `n` variables.
    Full,
    /// The `n^2`-bit tensor table.
    Tensor,
}

impl QuadeqLabel {
    pub const ALL: [QuadeqLabel; 4] = [QuadeqLabel::L1, QuadeqLabel::L2, QuadeqLabel::Full, QuadeqLabel::Tensor];

    pub fn bits(self, n: usize) -> usize {
        match self {
            QuadeqLabel::L1 | QuadeqLabel::L2 => n / 2,
            QuadeqLabel::Full => n,
            QuadeqLabel::Tensor => n * n,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            QuadeqLabel::L1 => "l1",
            QuadeqLabel::L2 => "l2",
            QuadeqLabel::Full => "l12",
            QuadeqLabel::Tensor => "l12x",
        }
    }
}

/// One prover's answers: a bit for every labelled query.
pub trait QuadeqOracle: Sync {
    fn answer(&self, label: QuadeqLabel, query: u128) -> bool;
}

/// Inner products with an assignment `x`: `u . x_1`, `v . x_2`, `u . x` and
/// `w . t` for a tensor vector `t` (honestly `x (x) x`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentOracle {
    n: usize,
    x: u128,
    tensor: u128,
}

impl AssignmentOracle {
    /// The honest strategy from the instance's witness.
    pub fn honest(inst: &QuadeqInstance) -> Result<Self> {
        let x = inst.witness.ok_or(Error::MissingWitness)?;
        Ok(Self::from_assignment(inst.n, x))
    }

    /// Honest-form answers for an arbitrary assignment.
    pub fn from_assignment(n: usize, x: u128) -> Self {
        AssignmentOracle { n, x: x & mask(n), tensor: tensor(n, x, x) }
    }

    /// Linear tables from `x`, tensor table from `x (x) y`.
    pub fn with_tensor(n: usize, x: u128, y: u128) -> Self {
        AssignmentOracle { n, x: x & mask(n), tensor: tensor(n, x, y) }
    }
}

impl QuadeqOracle for AssignmentOracle {
    fn answer(&self, label: QuadeqLabel, q: u128) -> bool {
        let h = self.n / 2;
        match label {
            QuadeqLabel::L1 => parity(q & self.x & mask(h)),
            QuadeqLabel::L2 => parity(q & (self.x >> h)),
            QuadeqLabel::Full => parity(q & self.x),
            QuadeqLabel::Tensor => parity(q & self.tensor),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadeqStep {
    #[serde(rename = "1a")]
    LinearityL1,
    #[serde(rename = "1b")]
    LinearityL2,
    #[serde(rename = "1c")]
    LinearityFull,
    #[serde(rename = "1d")]
    LinearityTensor,
    #[serde(rename = "2")]
    Consistency,
    #[serde(rename = "3")]
    TensorProduct,
    #[serde(rename = "4")]
    Constraint,
}

impl QuadeqStep {
    pub const ALL: [QuadeqStep; 7] = [
        QuadeqStep::LinearityL1,
        QuadeqStep::LinearityL2,
        QuadeqStep::LinearityFull,
        QuadeqStep::LinearityTensor,
        QuadeqStep::Consistency,
        QuadeqStep::TensorProduct,
        QuadeqStep::Constraint,
    ];

    pub fn name(self) -> &'static str {
        ["1a", "1b", "1c", "1d", "2", "3", "4"][self as usize]
    }
}

/// Probabilities of steps 1-4 and of the four linearity sub-tests in step 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadeqMixture {
    pub steps: [Prob; 4],
    pub linearity: [Prob; 4],
}

impl Default for QuadeqMixture {
    fn default() -> Self {
        let q = Ratio::new(1, 4);
        QuadeqMixture { steps: [q; 4], linearity: [q; 4] }
    }
}

impl QuadeqMixture {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("steps", &self.steps), ("linearity", &self.linearity)] {
            let total = w.iter().fold(Ratio::from_integer(0u64), |a, b| a + b);
            if total != Ratio::from_integer(1) {
                return Err(Error::InvalidParams(format!("{name} mixture sums to {total}")));
            }
        }
        Ok(())
    }

    /// Probability of each of the seven sub-tests.
    pub fn weights(&self) -> [Prob; 7] {
        let s = &self.steps;
        let l = &self.linearity;
        [s[0] * l[0], s[0] * l[1], s[0] * l[2], s[0] * l[3], s[1], s[2], s[3]]
    }
}

fn check(inst: &QuadeqInstance, mix: &QuadeqMixture) -> Result<()> {
    mix.validate()?;
    if inst.n > QUADEQ_MAX_VARS {
        return Err(Error::InvalidParams(format!("n = {} exceeds {QUADEQ_MAX_VARS}", inst.n)));
    }
    Ok(())
}

/// Verdict of one linearity-style round given the three queries, the rule
/// for Alice's implied third answer and Bob's position `i`.
fn oracularized_round(
    alice: &dyn QuadeqOracle,
    bob: &dyn QuadeqOracle,
    queries: [(QuadeqLabel, u128); 3],
    third: impl Fn(bool, bool) -> bool,
    i: usize,
) -> bool {
    let a1 = alice.answer(queries[0].0, queries[0].1);
    let a2 = alice.answer(queries[1].0, queries[1].1);
    let a = [a1, a2, third(a1, a2)];
    bob.answer(queries[i].0, queries[i].1) == a[i]
}

fn step_round<R: Rng>(
    inst: &QuadeqInstance,
    step: QuadeqStep,
    alice: &dyn QuadeqOracle,
    bob: &dyn QuadeqOracle,
    rng: &mut R,
) -> bool {
    let n = inst.n;
    let h = n / 2;
    let xor = |a: bool, b: bool| a ^ b;
    let and = |a: bool, b: bool| a & b;
    match step {
        QuadeqStep::LinearityL1 | QuadeqStep::LinearityL2 | QuadeqStep::LinearityFull | QuadeqStep::LinearityTensor => {
            let label = QuadeqLabel::ALL[step as usize];
            let m = mask(label.bits(n));
            let (u, v) = (rng.gen::<u128>() & m, rng.gen::<u128>() & m);
            let i = rng.gen_range(0..3);
            oracularized_round(alice, bob, [(label, u), (label, v), (label, u ^ v)], xor, i)
        }
        QuadeqStep::Consistency => {
            let (u, v) = (rng.gen::<u128>() & mask(h), rng.gen::<u128>() & mask(h));
            let i = rng.gen_range(0..3);
            let q = [(QuadeqLabel::L1, u), (QuadeqLabel::L2, v), (QuadeqLabel::Full, u | v << h)];
            oracularized_round(alice, bob, q, xor, i)
        }
        QuadeqStep::TensorProduct => {
            let (u, v) = (rng.gen::<u128>() & mask(n), rng.gen::<u128>() & mask(n));
            let i = rng.gen_range(0..3);
            let q = [(QuadeqLabel::Full, u), (QuadeqLabel::Full, v), (QuadeqLabel::Tensor, tensor(n, u, v))];
            oracularized_round(alice, bob, q, and, i)
        }
        QuadeqStep::Constraint => {
            let v = rng.gen::<u64>() & (mask(inst.equations()) as u64);
            let (w, target) = inst.combination(v);
            alice.answer(QuadeqLabel::Tensor, w) == target
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: QuadeqStep,
    pub rounds: u64,
    pub accepted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadeqStats {
    pub trials: u64,
    pub accepted: u64,
    pub acceptance: f64,
    pub stderr: f64,
    pub per_step: Vec<StepStats>,
}

fn integer_weights(w: &[Prob; 7]) -> (Vec<u64>, u64) {
    let den = w.iter().fold(1u64, |acc, p| num_integer::lcm(acc, *p.denom()));
    (w.iter().map(|p| p.numer() * (den / p.denom())).collect(), den)
}

/// Samples rounds of the QUADEQ test. Each round picks a sub-test from the
/// mixture and which prover plays Alice; round `t` uses stream `t` of `seed`.
pub fn quadeq_run(
    inst: &QuadeqInstance,
    mix: &QuadeqMixture,
    p0: &dyn QuadeqOracle,
    p1: &dyn QuadeqOracle,
    trials: u64,
    seed: u64,
) -> Result<QuadeqStats> {
    check(inst, mix)?;
    let (weights, den) = integer_weights(&mix.weights());
    let cumulative: Vec<u64> = weights
        .iter()
        .scan(0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u = rng.gen_range(0..den);
            let s = cumulative.partition_point(|&c| c <= u);
            let (alice, bob) = if rng.gen::<bool>() { (p1, p0) } else { (p0, p1) };
            let ok = step_round(inst, QuadeqStep::ALL[s], alice, bob, &mut rng);
            let mut c = [[0u64; 2]; 7];
            c[s] = [1, u64::from(ok)];
            c
        })
        .reduce(
            || [[0u64; 2]; 7],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x[0] += y[0];
                    x[1] += y[1];
                }
                a
            },
        );
    let accepted: u64 = counts.iter().map(|c| c[1]).sum();
    let acceptance = if trials == 0 { 0.0 } else { accepted as f64 / trials as f64 };
    Ok(QuadeqStats {
        trials,
        accepted,
        acceptance,
        stderr: binomial_stderr(acceptance, trials),
        per_step: QuadeqStep::ALL
            .iter()
            .zip(counts)
            .map(|(&step, c)| StepStats { step, rounds: c[0], accepted: c[1] })
            .collect(),
    })
}

/// In-place Walsh-Hadamard transform of a +-1 table.
fn walsh_hadamard(v: &mut [i128]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn table(oracle: &dyn QuadeqOracle, label: QuadeqLabel, bits: usize) -> Vec<bool> {
    (0..1u128 << bits).into_par_iter().map(|q| oracle.answer(label, q)).collect()
}

/// Exact acceptance count of the oracularized BLR test over `(u, v, i)`,
/// out of `3 * 4^k`. The `i = 3` term uses
/// `sum_{u,v} (-1)^{A(u)+A(v)+B(u+v)} = 2^{-k} sum_s hat(A)(s)^2 hat(B)(s)`.
fn linearity_count(a: &[bool], b: &[bool]) -> u128 {
    let size = a.len() as u128;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u128;
    let sign = |t: &[bool]| -> Vec<i128> { t.iter().map(|&x| if x { -1 } else { 1 }).collect() };
    let (mut fa, mut fb) = (sign(a), sign(b));
    walsh_hadamard(&mut fa);
    walsh_hadamard(&mut fb);
    let corr: i128 = fa.iter().zip(&fb).map(|(x, y)| x * x * y).sum::<i128>() / size as i128;
    let third = ((size * size) as i128 + corr) / 2;
    2 * agree * size + third as u128
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepExact {
    pub step: QuadeqStep,
    pub weight: Prob,
    pub acceptance: Prob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadeqExact {
    pub acceptance: Prob,
    pub per_step: Vec<StepExact>,
}

fn ratio_u64(num: u128, den: u128) -> Result<Prob> {
    let r = Ratio::new(num, den);
    match (u64::try_from(*r.numer()), u64::try_from(*r.denom())) {
        (Ok(n), Ok(d)) => Ok(Ratio::new(n, d)),
        _ => Err(Error::InvalidParams(format!("exact value {num}/{den} does not fit 64 bits"))),
    }
}

/// Exact acceptance per sub-test: Walsh-Hadamard for step 1, enumeration
/// of `(u, v, i)` for steps 2-3 and of all `2^K` combinations for step 4.
/// Both role assignments are averaged.
pub fn quadeq_exact(
    inst: &QuadeqInstance,
    mix: &QuadeqMixture,
    p0: &dyn QuadeqOracle,
    p1: &dyn QuadeqOracle,
) -> Result<QuadeqExact> {
    check(inst, mix)?;
    let n = inst.n;
    if n > QUADEQ_EXACT_MAX_VARS || inst.equations() > QUADEQ_EXACT_MAX_EQUATIONS {
        return Err(Error::SearchSpaceTooLarge {
            size: 1u128 << (n * n).min(127),
            limit: 1u128 << (QUADEQ_EXACT_MAX_VARS * QUADEQ_EXACT_MAX_VARS),
        });
    }
    let h = n / 2;
    let tables: Vec<[Vec<bool>; 4]> =
        [p0, p1].iter().map(|p| QuadeqLabel::ALL.map(|l| table(*p, l, l.bits(n)))).collect();
    let roles = [(0usize, 1usize), (1, 0)];
    let mut per_step = Vec::with_capacity(7);
    let weights = mix.weights();
    for (s, step) in QuadeqStep::ALL.into_iter().enumerate() {
        let (num, den): (u128, u128) = match step {
            QuadeqStep::LinearityL1
            | QuadeqStep::LinearityL2
            | QuadeqStep::LinearityFull
            | QuadeqStep::LinearityTensor => {
                let k = QuadeqLabel::ALL[s].bits(n);
                let num = roles.iter().map(|&(a, b)| linearity_count(&tables[a][s], &tables[b][s])).sum();
                (num, 2 * 3 * (1u128 << (2 * k)))
            }
            QuadeqStep::Consistency | QuadeqStep::TensorProduct => {
                let bits = if step == QuadeqStep::Consistency { h } else { n };
                let size = 1u128 << bits;
                let num = roles
                    .iter()
                    .map(|&(a, b)| {
                        let (alice, bob) = ([p0, p1][a], [p0, p1][b]);
                        (0..size * size)
                            .into_par_iter()
                            .map(|uv| {
                                let (u, v) = (uv / size, uv % size);
                                let q = if step == QuadeqStep::Consistency {
                                    [(QuadeqLabel::L1, u), (QuadeqLabel::L2, v), (QuadeqLabel::Full, u | v << h)]
                                } else {
                                    [
                                        (QuadeqLabel::Full, u),
                                        (QuadeqLabel::Full, v),
                                        (QuadeqLabel::Tensor, tensor(n, u, v)),
                                    ]
                                };
                                (0..3)
                                    .filter(|&i| {
                                        if step == QuadeqStep::Consistency {
                                            oracularized_round(alice, bob, q, |x, y| x ^ y, i)
                                        } else {
                                            oracularized_round(alice, bob, q, |x, y| x & y, i)
                                        }
                                    })
                                    .count() as u128
                            })
                            .sum::<u128>()
                    })
                    .sum();
                (num, 2 * 3 * size * size)
            }
            QuadeqStep::Constraint => {
                let count = 1u64 << inst.equations();
                let num = (0..count)
                    .map(|v| {
                        let (w, target) = inst.combination(v);
                        [p0, p1].iter().filter(|p| p.answer(QuadeqLabel::Tensor, w) == target).count() as u128
                    })
                    .sum();
                (num, 2 * count as u128)
            }
        };
        per_step.push(StepExact { step, weight: weights[s], acceptance: ratio_u64(num, den)? });
    }
    let acceptance = per_step.iter().fold(Ratio::from_integer(0u64), |acc, e| acc + e.weight * e.acceptance);
    Ok(QuadeqExact { acceptance, per_step })
}

/// The QUADEQ test for `n <= 2` as an explicit two-player game. Steps 1-3
/// are oracularized three-query tests; in step 4 Bob answers the query
/// `(l1, l2, w)` while Alice receives a dummy question.
#[derive(Clone, Debug)]
pub struct QuadeqGame {
    pub game: GameSpec,
    pub trimmed: bool,
    test: ThreeQueryTest,
    untrimmed: GameSpec,
    offsets: [usize; 4],
    n: usize,
}

pub const DUMMY_QUESTION: &str = "-";

pub fn quadeq_game(inst: &QuadeqInstance, mix: &QuadeqMixture, trimmed: bool) -> Result<QuadeqGame> {
    check(inst, mix)?;
    let n = inst.n;
    if n > QUADEQ_EXPLICIT_MAX_VARS {
        return Err(Error::SearchSpaceTooLarge {
            size: 1u128 << (2 * n * n),
            limit: 1 << (2 * QUADEQ_EXPLICIT_MAX_VARS.pow(2)),
        });
    }
    let p4 = mix.steps[3];
    if p4 == Ratio::from_integer(1) {
        return Err(Error::InvalidParams("explicit game needs some weight on steps 1-3".into()));
    }
    let h = n / 2;
    let mut offsets = [0usize; 4];
    let mut queries = Vec::new();
    for (l, label) in QuadeqLabel::ALL.into_iter().enumerate() {
        offsets[l] = queries.len();
        let bits = label.bits(n);
        queries.extend((0..1u128 << bits).map(|q| format!("{}:{}", label.tag(), bit_string(q, bits))));
    }
    let idx = |label: QuadeqLabel, q: u128| offsets[label as usize] + q as usize;
    let weights = mix.weights();
    let rest = Ratio::from_integer(1) - p4;
    let mut triples = Vec::new();
    let mut rules = Vec::new();
    for (s, step) in QuadeqStep::ALL.into_iter().enumerate().take(6) {
        if *weights[s].numer() == 0 {
            continue;
        }
        let (bits, label_of): (usize, [QuadeqLabel; 3]) = match step {
            QuadeqStep::Consistency => (h, [QuadeqLabel::L1, QuadeqLabel::L2, QuadeqLabel::Full]),
            QuadeqStep::TensorProduct => (n, [QuadeqLabel::Full, QuadeqLabel::Full, QuadeqLabel::Tensor]),
            _ => (QuadeqLabel::ALL[s].bits(n), [QuadeqLabel::ALL[s]; 3]),
        };
        let size = 1u128 << bits;
        let p = weights[s] / rest / Ratio::from_integer((size * size) as u64);
        for u in 0..size {
            for v in 0..size {
                let third = match step {
                    QuadeqStep::Consistency => u | v << h,
                    QuadeqStep::TensorProduct => tensor(n, u, v),
                    _ => u ^ v,
                };
                triples.push(([idx(label_of[0], u), idx(label_of[1], v), idx(label_of[2], third)], p));
                rules.push(step == QuadeqStep::TensorProduct);
            }
        }
    }
    let test = ThreeQueryTest::from_fn(
        "quadeq",
        queries,
        vec![vec!["0".into(), "1".into()]; offsets[3] + (1 << (n * n))],
        triples,
        |k, a| if rules[k] { a[2] == (a[0] & a[1]) } else { a[2] == (a[0] ^ a[1]) },
    )?;
    let inner = oracularize(&test)?;
    let inner_rounds = inner.distribution().len();
    let mut alice_questions = inner.alice_questions().to_vec();
    let mut alice_answers: Vec<Vec<String>> =
        (0..alice_questions.len()).map(|q| inner.alice_answers(q).to_vec()).collect();
    alice_questions.push(DUMMY_QUESTION.into());
    alice_answers.push(vec![DUMMY_QUESTION.into()]);
    let dummy = alice_questions.len() - 1;
    let mut distribution: Vec<(usize, usize, Prob)> =
        inner.distribution().iter().map(|&(a, b, p)| (a, b, p * rest)).collect();
    let count = 1u64 << inst.equations();
    let mut targets = Vec::with_capacity(count as usize);
    if *p4.numer() != 0 {
        for v in 0..count {
            let (w, target) = inst.combination(v);
            distribution.push((dummy, idx(QuadeqLabel::Tensor, w), p4 / Ratio::from_integer(count)));
            targets.push(target);
        }
    }
    let untrimmed = GameSpec::from_fn(
        "oracularized-quadeq",
        alice_questions,
        inner.bob_questions().to_vec(),
        alice_answers,
        (0..inner.bob_questions().len()).map(|q| inner.bob_answers(q).to_vec()).collect(),
        distribution,
        |k, _, _, a, b| if k < inner_rounds { inner.accept(k, a, b) } else { (b == 1) == targets[k - inner_rounds] },
        true,
    )?;
    let game = if trimmed { answer_trim(&untrimmed)? } else { untrimmed.clone() };
    Ok(QuadeqGame { game, trimmed, test, untrimmed, offsets, n })
}

impl QuadeqGame {
    /// Both players answer every query from `oracle`.
    pub fn strategy_from_oracle(&self, oracle: &dyn QuadeqOracle) -> ClassicalStrategy {
        let mut f = vec![0usize; self.test.queries.len()];
        for label in QuadeqLabel::ALL {
            for q in 0..1u128 << label.bits(self.n) {
                f[self.offsets[label as usize] + q as usize] = usize::from(oracle.answer(label, q));
            }
        }
        let mut s = oracle_strategy(&self.test, &f);
        s.alice.push(0);
        if self.trimmed {
            trim_strategy(&self.untrimmed, &s)
        } else {
            s
        }
    }
}
