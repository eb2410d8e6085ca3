//! Explicit two-player games, classical and entangled strategies, and the
//! operations that build new games from old ones.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    c, eigh, hermitian_part, random_projective_measurement, BipartiteState, CMat, Operator, SubMeasurement,
};
use crate::rng::{binomial_stderr, trial_rng};
use crate::sdp::{solve, SdpInstance};

pub type Prob = Ratio<u64>;

pub const STRATEGY_GUARD: u128 = 10_000_000;
pub const REPEAT_GUARD: u128 = 1_000_000;
pub const SEESAW_MAX_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinPredicate {
    /// `a xor b = x and y` on answer and question indices.
    Chsh,
    AcceptAll,
    RejectAll,
    /// Answer indices coincide.
    Equal,
}

impl BuiltinPredicate {
    fn eval(self, qa: usize, qb: usize, a: usize, b: usize) -> bool {
        match self {
            BuiltinPredicate::Chsh => (a ^ b) == (qa & qb),
            BuiltinPredicate::AcceptAll => true,
            BuiltinPredicate::RejectAll => false,
            BuiltinPredicate::Equal => a == b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    Builtin(BuiltinPredicate),
    /// Acceptance bits `a * |B_qb| + b`, one row per round.
    Table(Vec<Vec<bool>>),
}

/// One round of the verifier: a question pair, its probability and, for
/// tabulated predicates, the accepted answer pairs. Several rounds may share
/// a question pair when the verifier keeps private randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub alice: usize,
    pub bob: usize,
    /// `[numerator, denominator]`.
    pub p: [u64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AnswerSetsJson {
    Global(Vec<String>),
    PerQuestion(Vec<Vec<String>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GameJson {
    name: String,
    alice_questions: Vec<String>,
    bob_questions: Vec<String>,
    alice_answers: AnswerSetsJson,
    bob_answers: AnswerSetsJson,
    distribution: Vec<DistributionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    builtin: Option<BuiltinPredicate>,
    #[serde(default)]
    projection: bool,
}

/// A two-player game in explicit form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameJson", into = "GameJson")]
pub struct GameSpec {
    name: String,
    alice_questions: Vec<String>,
    bob_questions: Vec<String>,
    alice_answers: Vec<Vec<String>>,
    bob_answers: Vec<Vec<String>>,
    distribution: Vec<(usize, usize, Prob)>,
    predicate: Predicate,
    projection: bool,
}

fn expand_answers(a: AnswerSetsJson, n: usize) -> Vec<Vec<String>> {
    match a {
        AnswerSetsJson::Global(v) => vec![v; n],
        AnswerSetsJson::PerQuestion(v) => v,
    }
}

fn compact_answers(a: &[Vec<String>]) -> AnswerSetsJson {
    if a.windows(2).all(|w| w[0] == w[1]) && !a.is_empty() {
        AnswerSetsJson::Global(a[0].clone())
    } else {
        AnswerSetsJson::PerQuestion(a.to_vec())
    }
}

impl TryFrom<GameJson> for GameSpec {
    type Error = Error;
    fn try_from(j: GameJson) -> Result<Self> {
        let na = j.alice_questions.len();
        let nb = j.bob_questions.len();
        let alice_answers = expand_answers(j.alice_answers, na);
        let bob_answers = expand_answers(j.bob_answers, nb);
        let mut distribution = Vec::with_capacity(j.distribution.len());
        let mut rows = Vec::with_capacity(j.distribution.len());
        for e in &j.distribution {
            if e.p[1] == 0 {
                return Err(Error::InvalidGame("zero denominator".into()));
            }
            distribution.push((e.alice, e.bob, Ratio::new(e.p[0], e.p[1])));
            if j.builtin.is_some() {
                if e.accept.is_some() {
                    return Err(Error::InvalidGame(
                        "round lists accepted answers alongside a builtin predicate".into(),
                    ));
                }
                continue;
            }
            let list = e
                .accept
                .as_ref()
                .ok_or_else(|| Error::InvalidGame(format!("round ({}, {}) has no accepted answers", e.alice, e.bob)))?;
            let sa = alice_answers.get(e.alice).map_or(0, |v| v.len());
            let sb = bob_answers.get(e.bob).map_or(0, |v| v.len());
            let mut row = vec![false; sa * sb];
            for &[a, b] in list {
                if a >= sa || b >= sb {
                    return Err(Error::InvalidGame(format!(
                        "answer ({a}, {b}) out of range in round ({}, {})",
                        e.alice, e.bob
                    )));
                }
                row[a * sb + b] = true;
            }
            rows.push(row);
        }
        let predicate = match j.builtin {
            Some(b) => Predicate::Builtin(b),
            None => Predicate::Table(rows),
        };
        GameSpec::new(
            j.name,
            j.alice_questions,
            j.bob_questions,
            alice_answers,
            bob_answers,
            distribution,
            predicate,
            j.projection,
        )
    }
}

impl From<GameSpec> for GameJson {
    fn from(g: GameSpec) -> Self {
        let distribution = g
            .distribution
            .iter()
            .enumerate()
            .map(|(k, &(alice, bob, p))| {
                let accept = match &g.predicate {
                    Predicate::Builtin(_) => None,
                    Predicate::Table(t) => {
                        let sb = g.bob_answers[bob].len();
                        Some(t[k].iter().enumerate().filter(|(_, &ok)| ok).map(|(i, _)| [i / sb, i % sb]).collect())
                    }
                };
                DistributionEntry { alice, bob, p: [*p.numer(), *p.denom()], accept }
            })
            .collect();
        GameJson {
            alice_answers: compact_answers(&g.alice_answers),
            bob_answers: compact_answers(&g.bob_answers),
            distribution,
            builtin: match g.predicate {
                Predicate::Builtin(b) => Some(b),
                Predicate::Table(_) => None,
            },
            name: g.name,
            alice_questions: g.alice_questions,
            bob_questions: g.bob_questions,
            projection: g.projection,
        }
    }
}

impl GameSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: String,
        alice_questions: Vec<String>,
        bob_questions: Vec<String>,
        alice_answers: Vec<Vec<String>>,
        bob_answers: Vec<Vec<String>>,
        distribution: Vec<(usize, usize, Prob)>,
        predicate: Predicate,
        projection: bool,
    ) -> Result<Self> {
        if alice_questions.is_empty() || bob_questions.is_empty() {
            return Err(Error::InvalidGame("empty question set".into()));
        }
        if alice_answers.len() != alice_questions.len() || bob_answers.len() != bob_questions.len() {
            return Err(Error::InvalidGame("answer sets do not match question sets".into()));
        }
        if alice_answers.iter().chain(&bob_answers).any(|v| v.is_empty()) {
            return Err(Error::InvalidGame("empty answer set".into()));
        }
        for &(qa, qb, _) in &distribution {
            if qa >= alice_questions.len() || qb >= bob_questions.len() {
                return Err(Error::InvalidGame(format!("question pair ({qa}, {qb}) out of range")));
            }
        }
        let total = distribution.iter().fold(Ratio::from_integer(0u64), |acc, (_, _, p)| acc + p);
        if total != Ratio::from_integer(1) {
            return Err(Error::InvalidGame(format!("distribution sums to {total}")));
        }
        let keep: Vec<bool> = distribution.iter().map(|(_, _, p)| *p.numer() != 0).collect();
        let predicate = match predicate {
            Predicate::Builtin(BuiltinPredicate::Chsh)
                if alice_answers.iter().chain(&bob_answers).any(|v| v.len() != 2)
                    || alice_questions.len() > 2
                    || bob_questions.len() > 2 =>
            {
                return Err(Error::InvalidGame("chsh predicate needs binary questions and answers".into()));
            }
            Predicate::Table(t) => {
                if t.len() != distribution.len() {
                    return Err(Error::InvalidGame("predicate needs one row per round".into()));
                }
                for (&(qa, qb, _), row) in distribution.iter().zip(&t) {
                    if row.len() != alice_answers[qa].len() * bob_answers[qb].len() {
                        return Err(Error::InvalidGame(format!("predicate row size for ({qa}, {qb})")));
                    }
                }
                Predicate::Table(t.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| r).collect())
            }
            p => p,
        };
        let distribution = distribution.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(d, _)| d).collect();
        let game = GameSpec {
            name,
            alice_questions,
            bob_questions,
            alice_answers,
            bob_answers,
            distribution,
            predicate,
            projection,
        };
        if projection && !game.is_projection() {
            return Err(Error::InvalidGame("projection flag set but some Alice answer admits two Bob answers".into()));
        }
        Ok(game)
    }

    /// Tabulates `accept(round, qa, qb, a, b)` for every round of `distribution`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn(
        name: impl Into<String>,
        alice_questions: Vec<String>,
        bob_questions: Vec<String>,
        alice_answers: Vec<Vec<String>>,
        bob_answers: Vec<Vec<String>>,
        distribution: Vec<(usize, usize, Prob)>,
        accept: impl Fn(usize, usize, usize, usize, usize) -> bool + Sync,
        projection: bool,
    ) -> Result<Self> {
        for &(qa, qb, _) in &distribution {
            if qa >= alice_answers.len() || qb >= bob_answers.len() {
                return Err(Error::InvalidGame(format!("question pair ({qa}, {qb}) out of range")));
            }
        }
        let table = distribution
            .par_iter()
            .enumerate()
            .map(|(k, &(qa, qb, _))| {
                let (sa, sb) = (alice_answers[qa].len(), bob_answers[qb].len());
                (0..sa * sb).map(|i| accept(k, qa, qb, i / sb, i % sb)).collect()
            })
            .collect();
        Self::new(
            name.into(),
            alice_questions,
            bob_questions,
            alice_answers,
            bob_answers,
            distribution,
            Predicate::Table(table),
            projection,
        )
    }

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn uniform(na: usize, nb: usize) -> Vec<(usize, usize, Prob)> {
        let p = Ratio::new(1, (na * nb) as u64);
        (0..na).flat_map(|a| (0..nb).map(move |b| (a, b, p))).collect()
    }

    fn builtin_game(name: &str, nq: usize, na: usize, pred: BuiltinPredicate) -> Self {
        let ans = vec![(0..na).map(|a| a.to_string()).collect::<Vec<_>>(); nq];
        Self::new(
            name.into(),
            Self::labels("x", nq),
            Self::labels("y", nq),
            ans.clone(),
            ans,
            Self::uniform(nq, nq),
            Predicate::Builtin(pred),
            false,
        )
        .expect("builtin game is well formed")
    }

    pub fn chsh() -> Self {
        Self::builtin_game("chsh", 2, 2, BuiltinPredicate::Chsh)
    }

    pub fn accept_all(questions: usize, answers: usize) -> Self {
        Self::builtin_game("accept-all", questions, answers, BuiltinPredicate::AcceptAll)
    }

    pub fn reject_all(questions: usize, answers: usize) -> Self {
        Self::builtin_game("reject-all", questions, answers, BuiltinPredicate::RejectAll)
    }

    /// Uniform questions, accept iff the answers coincide.
    pub fn equality(questions: usize, answers: usize) -> Self {
        Self::builtin_game("equal", questions, answers, BuiltinPredicate::Equal)
    }

    /// A named built-in game: `chsh`, `accept-all`, `reject-all`, `equal`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "chsh" => Ok(Self::chsh()),
            "accept-all" => Ok(Self::accept_all(2, 2)),
            "reject-all" => Ok(Self::reject_all(2, 2)),
            "equal" => Ok(Self::equality(2, 2)),
            _ => Err(Error::UnknownName {
                kind: "game",
                name: name.into(),
                known: "chsh, accept-all, reject-all, equal".into(),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alice_questions(&self) -> &[String] {
        &self.alice_questions
    }

    pub fn bob_questions(&self) -> &[String] {
        &self.bob_questions
    }

    pub fn alice_answers(&self, q: usize) -> &[String] {
        &self.alice_answers[q]
    }

    pub fn bob_answers(&self, q: usize) -> &[String] {
        &self.bob_answers[q]
    }

    pub fn distribution(&self) -> &[(usize, usize, Prob)] {
        &self.distribution
    }

    pub fn projection_claimed(&self) -> bool {
        self.projection
    }

    /// Verdict of round `k` on answers `(a, b)`.
    pub fn accept(&self, k: usize, a: usize, b: usize) -> bool {
        let (qa, qb, _) = self.distribution[k];
        match &self.predicate {
            Predicate::Builtin(p) => p.eval(qa, qb, a, b),
            Predicate::Table(t) => t[k][a * self.bob_answers[qb].len() + b],
        }
    }

    /// For every round and Alice answer, at most one accepted Bob answer.
    pub fn is_projection(&self) -> bool {
        self.distribution.iter().enumerate().all(|(k, &(qa, qb, _))| {
            (0..self.alice_answers[qa].len())
                .all(|a| (0..self.bob_answers[qb].len()).filter(|&b| self.accept(k, a, b)).count() <= 1)
        })
    }

    /// Integer weights over their least common denominator.
    fn integer_weights(&self) -> (Vec<u128>, u128) {
        let den = self.distribution.iter().fold(1u128, |acc, (_, _, p)| acc.lcm(&(*p.denom() as u128)));
        let w = self.distribution.iter().map(|(_, _, p)| *p.numer() as u128 * (den / *p.denom() as u128)).collect();
        (w, den)
    }

    fn strategy_space(answers: &[Vec<String>]) -> u128 {
        answers.iter().try_fold(1u128, |acc, v| acc.checked_mul(v.len() as u128)).unwrap_or(u128::MAX)
    }

    /// Returns the same game with roles exchanged.
    pub fn swapped(&self) -> GameSpec {
        let distribution = self.distribution.iter().map(|&(a, b, p)| (b, a, p)).collect();
        GameSpec::from_fn(
            format!("{}-swapped", self.name),
            self.bob_questions.clone(),
            self.alice_questions.clone(),
            self.bob_answers.clone(),
            self.alice_answers.clone(),
            distribution,
            |k, _, _, b, a| self.accept(k, a, b),
            false,
        )
        .expect("swap of a valid game")
    }
}

/// Deterministic answer tables for both players.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl ClassicalStrategy {
    pub fn check(&self, game: &GameSpec) -> Result<()> {
        if self.alice.len() != game.alice_questions.len() || self.bob.len() != game.bob_questions.len() {
            return Err(Error::CoverageGap(format!(
                "strategy covers {}/{} questions for {}/{}",
                self.alice.len(),
                self.bob.len(),
                game.alice_questions.len(),
                game.bob_questions.len()
            )));
        }
        for (q, &a) in self.alice.iter().enumerate() {
            if a >= game.alice_answers[q].len() {
                return Err(Error::CoverageGap(format!("alice answer {a} on {}", game.alice_questions[q])));
            }
        }
        for (q, &b) in self.bob.iter().enumerate() {
            if b >= game.bob_answers[q].len() {
                return Err(Error::CoverageGap(format!("bob answer {b} on {}", game.bob_questions[q])));
            }
        }
        Ok(())
    }

    /// Deterministic strategy as a one-dimensional quantum strategy.
    pub fn embed(&self, game: &GameSpec) -> Result<QuantumStrategy> {
        embed_mixture(game, &[(self.clone(), 1.0)])
    }
}

/// Mixture of deterministic strategies `sum_k p_k s_k` as diagonal
/// projective measurements on `M = diag(sqrt(p_k))`.
pub fn embed_mixture(game: &GameSpec, mix: &[(ClassicalStrategy, f64)]) -> Result<QuantumStrategy> {
    let dim = mix.len();
    for (s, _) in mix {
        s.check(game)?;
    }
    let m = CMat::from_fn(dim, dim, |r, k| if r == k { c(mix[r].1.max(0.0).sqrt()) } else { c(0.0) });
    let psi = BipartiteState::new(m)?;
    let side = |tables: &dyn Fn(&ClassicalStrategy) -> &Vec<usize>,
                answers: &[Vec<String>]|
     -> Result<Vec<SubMeasurement>> {
        (0..answers.len())
            .map(|q| {
                let ops = (0..answers[q].len())
                    .map(|a| {
                        let d: Vec<f64> = mix.iter().map(|(s, _)| if tables(s)[q] == a { 1.0 } else { 0.0 }).collect();
                        Operator::diagonal(&d)
                    })
                    .collect();
                SubMeasurement::new(answers[q].clone(), ops)
            })
            .collect()
    };
    let alice = side(&|s| &s.alice, &game.alice_answers)?;
    let bob = side(&|s| &s.bob, &game.bob_answers)?;
    QuantumStrategy::new(psi, alice, bob)
}

/// Shared state plus one measurement per question for each player.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "QuantumJson", into = "QuantumJson")]
pub struct QuantumStrategy {
    psi: BipartiteState,
    alice: Vec<SubMeasurement>,
    bob: Vec<SubMeasurement>,
}

#[derive(Serialize, Deserialize)]
struct QuantumJson {
    psi: BipartiteState,
    alice: Vec<SubMeasurement>,
    bob: Vec<SubMeasurement>,
}

impl TryFrom<QuantumJson> for QuantumStrategy {
    type Error = Error;
    fn try_from(j: QuantumJson) -> Result<Self> {
        QuantumStrategy::new(j.psi, j.alice, j.bob)
    }
}

impl From<QuantumStrategy> for QuantumJson {
    fn from(s: QuantumStrategy) -> Self {
        QuantumJson { psi: s.psi, alice: s.alice, bob: s.bob }
    }
}

impl QuantumStrategy {
    pub fn new(psi: BipartiteState, alice: Vec<SubMeasurement>, bob: Vec<SubMeasurement>) -> Result<Self> {
        for m in alice.iter().chain(&bob) {
            if m.dim() != psi.dim() {
                return Err(Error::DimensionMismatch { expected: psi.dim(), got: m.dim() });
            }
            if !m.is_measurement() {
                return Err(Error::NotAMeasurement(m.measurement_defect()));
            }
        }
        Ok(QuantumStrategy { psi, alice, bob })
    }

    /// Both players use the same measurements.
    pub fn symmetric(psi: BipartiteState, shared: Vec<SubMeasurement>) -> Result<Self> {
        Self::new(psi, shared.clone(), shared)
    }

    pub fn psi(&self) -> &BipartiteState {
        &self.psi
    }

    pub fn alice(&self) -> &[SubMeasurement] {
        &self.alice
    }

    pub fn bob(&self) -> &[SubMeasurement] {
        &self.bob
    }

    fn check(&self, game: &GameSpec) -> Result<()> {
        let fits = |ms: &[SubMeasurement], ans: &[Vec<String>]| {
            ms.len() == ans.len() && ms.iter().zip(ans).all(|(m, a)| m.len() == a.len())
        };
        if !fits(&self.alice, &game.alice_answers) || !fits(&self.bob, &game.bob_answers) {
            return Err(Error::CoverageGap("quantum strategy does not match the game's question/answer sets".into()));
        }
        Ok(())
    }

    /// `p(a, b | qa, qb) = <A_qa^a, B_qb^b>_Psi`, row-major in `(a, b)`.
    pub fn joint(&self, qa: usize, qb: usize) -> Vec<f64> {
        let (ma, mb) = (&self.alice[qa], &self.bob[qb]);
        let mut out = Vec::with_capacity(ma.len() * mb.len());
        for a in ma.operators() {
            for b in mb.operators() {
                out.push(self.psi.pair(a, b).re);
            }
        }
        out
    }
}

/// Exact value of a deterministic strategy.
pub fn classical_strategy_value(game: &GameSpec, s: &ClassicalStrategy) -> Result<Prob> {
    s.check(game)?;
    Ok(game
        .distribution
        .iter()
        .enumerate()
        .filter(|&(k, &(qa, qb, _))| game.accept(k, s.alice[qa], s.bob[qb]))
        .map(|(_, e)| e)
        .fold(Ratio::from_integer(0), |acc, (_, _, p)| acc + p))
}

/// `sum_{qa,qb} pi(qa,qb) sum_{accepted (a,b)} <A_qa^a, B_qb^b>_Psi`.
pub fn quantum_strategy_value(game: &GameSpec, s: &QuantumStrategy) -> Result<f64> {
    s.check(game)?;
    let terms: Vec<f64> = game
        .distribution
        .par_iter()
        .enumerate()
        .map(|(k, &(qa, qb, p))| {
            let sb = game.bob_answers[qb].len();
            let joint = s.joint(qa, qb);
            let acc: f64 =
                joint.iter().enumerate().filter(|(i, _)| game.accept(k, i / sb, i % sb)).map(|(_, v)| v).sum();
            *p.numer() as f64 / *p.denom() as f64 * acc
        })
        .collect();
    Ok(terms.iter().sum())
}

/// Optimal deterministic strategy by enumerating the smaller player's
/// strategy space and best-responding per question on the other side.
pub fn classical_value_exact(game: &GameSpec) -> Result<(Prob, ClassicalStrategy)> {
    let alice_space = GameSpec::strategy_space(&game.alice_answers);
    let bob_space = GameSpec::strategy_space(&game.bob_answers);
    if alice_space.min(bob_space) > STRATEGY_GUARD {
        return Err(Error::SearchSpaceTooLarge { size: alice_space.min(bob_space), limit: STRATEGY_GUARD });
    }
    if bob_space < alice_space {
        let (v, s) = classical_value_exact(&game.swapped())?;
        return Ok((v, ClassicalStrategy { alice: s.bob, bob: s.alice }));
    }
    let (weights, den) = game.integer_weights();
    let radices: Vec<usize> = game.alice_answers.iter().map(|v| v.len()).collect();
    let nb = game.bob_questions.len();
    let decode = |mut idx: u128| -> Vec<usize> {
        let mut out = vec![0; radices.len()];
        for q in (0..radices.len()).rev() {
            out[q] = (idx % radices[q] as u128) as usize;
            idx /= radices[q] as u128;
        }
        out
    };
    let evaluate = |alice: &[usize]| -> (u128, Vec<usize>) {
        let mut scores: Vec<Vec<u128>> = (0..nb).map(|qb| vec![0; game.bob_answers[qb].len()]).collect();
        for (k, (&(qa, qb, _), &w)) in game.distribution.iter().zip(&weights).enumerate() {
            for (b, s) in scores[qb].iter_mut().enumerate() {
                if game.accept(k, alice[qa], b) {
                    *s += w;
                }
            }
        }
        let mut total = 0;
        let mut bob = vec![0; nb];
        for (qb, row) in scores.iter().enumerate() {
            let (b, &v) =
                row.iter().enumerate().fold((0, &0u128), |best, cur| if *cur.1 > *best.1 { cur } else { best });
            bob[qb] = b;
            total += v;
        }
        (total, bob)
    };
    let best = (0..alice_space)
        .into_par_iter()
        .map(|idx| (evaluate(&decode(idx)).0, idx))
        .reduce(|| (0, u128::MAX), |x, y| if x.0 > y.0 || (x.0 == y.0 && x.1 < y.1) { x } else { y });
    let alice = decode(best.1.min(alice_space - 1));
    let (num, bob) = evaluate(&alice);
    let value = Ratio::new(num, den);
    Ok((Ratio::new(*value.numer() as u64, *value.denom() as u64), ClassicalStrategy { alice, bob }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub trials: u64,
    pub accepted: u64,
    pub mean: f64,
    pub stderr: f64,
}

impl MonteCarloEstimate {
    pub fn from_counts(trials: u64, accepted: u64) -> Self {
        let mean = if trials == 0 { 0.0 } else { accepted as f64 / trials as f64 };
        MonteCarloEstimate { trials, accepted, mean, stderr: binomial_stderr(mean, trials) }
    }
}

fn sample_pair<R: Rng>(cumulative: &[u128], den: u128, rng: &mut R) -> usize {
    let u = rng.gen_range(0..den);
    cumulative.partition_point(|&c| c <= u)
}

fn cumulative(weights: &[u128]) -> Vec<u128> {
    weights
        .iter()
        .scan(0u128, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// Sampled value of a deterministic strategy: trial `i` uses stream `i` of `seed`.
pub fn classical_value_mc(
    game: &GameSpec,
    s: &ClassicalStrategy,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    s.check(game)?;
    let (w, den) = game.integer_weights();
    let cum = cumulative(&w);
    let accepted = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let k = sample_pair(&cum, den, &mut rng);
            let (qa, qb, _) = game.distribution[k];
            u64::from(game.accept(k, s.alice[qa], s.bob[qb]))
        })
        .sum();
    Ok(MonteCarloEstimate::from_counts(trials, accepted))
}

/// Sampled value of an entangled strategy; answers drawn from the joint
/// outcome distribution of each question pair.
pub fn quantum_value_mc(game: &GameSpec, s: &QuantumStrategy, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    s.check(game)?;
    let (w, den) = game.integer_weights();
    let cum = cumulative(&w);
    let joints: Vec<Vec<f64>> = game.distribution.iter().map(|&(qa, qb, _)| s.joint(qa, qb)).collect();
    let accepted = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let k = sample_pair(&cum, den, &mut rng);
            let (_, qb, _) = game.distribution[k];
            let sb = game.bob_answers[qb].len();
            let mut u: f64 = rng.gen();
            let joint = &joints[k];
            let mut pick = joint.len() - 1;
            for (idx, &p) in joint.iter().enumerate() {
                if u < p {
                    pick = idx;
                    break;
                }
                u -= p;
            }
            u64::from(game.accept(k, pick / sb, pick % sb))
        })
        .sum();
    Ok(MonteCarloEstimate::from_counts(trials, accepted))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeesawOutcome {
    /// Value of the best strategy found; a lower bound on the entangled value.
    pub lower_bound: f64,
    pub strategy: QuantumStrategy,
    pub history: Vec<f64>,
    pub stagnated: bool,
}

/// Alternating optimization over Alice's measurements, Bob's measurements
/// and the (symmetric) shared state. Each half-step is an exact or
/// SDP-solved best response; a step that lowers the value is discarded.
pub fn seesaw_lower_bound(game: &GameSpec, dim: usize, seed: u64, iters: usize) -> Result<SeesawOutcome> {
    if dim == 0 || dim > SEESAW_MAX_DIM {
        return Err(Error::InvalidParams(format!("seesaw dimension {dim} outside 1..={SEESAW_MAX_DIM}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = BipartiteState::random(dim, &mut rng);
    let random_side = |answers: &[Vec<String>], rng: &mut ChaCha8Rng| -> Result<Vec<SubMeasurement>> {
        answers
            .iter()
            .map(|a| SubMeasurement::new(a.clone(), random_projective_measurement(dim, a.len(), rng)))
            .collect()
    };
    let alice = random_side(&game.alice_answers, &mut rng)?;
    let bob = random_side(&game.bob_answers, &mut rng)?;
    let mut strat = QuantumStrategy::new(psi, alice, bob)?;
    let mut value = quantum_strategy_value(game, &strat)?;
    let mut history = vec![value];
    let mut stagnated = false;
    for _ in 0..iters {
        let start = value;
        for step in 0..3 {
            let candidate = match step {
                0 => alice_step(game, &strat)?,
                1 => bob_step(game, &strat)?,
                _ => state_step(game, &strat)?,
            };
            let v = quantum_strategy_value(game, &candidate)?;
            if v >= value {
                strat = candidate;
                value = v;
            }
        }
        history.push(value);
        if value - start <= 1e-12 {
            stagnated = true;
            break;
        }
    }
    Ok(SeesawOutcome { lower_bound: value, strategy: strat, history, stagnated })
}

/// Best of several seeds.
pub fn seesaw_best_of(game: &GameSpec, dim: usize, seeds: &[u64], iters: usize) -> Result<SeesawOutcome> {
    let runs = seeds.par_iter().map(|&s| seesaw_lower_bound(game, dim, s, iters)).collect::<Result<Vec<_>>>()?;
    Ok(runs.into_iter().reduce(|a, b| if b.lower_bound > a.lower_bound { b } else { a }).expect("at least one seed"))
}

/// Maximizes `sum_a Tr(P^a C_a)` over measurements `{P^a}`.
fn best_measurement(costs: &[CMat], labels: &[String]) -> Result<SubMeasurement> {
    let dim = costs[0].nrows();
    if costs.len() == 1 {
        return SubMeasurement::new(labels.to_vec(), vec![Operator::identity(dim)]);
    }
    if costs.len() == 2 {
        let (vals, vecs) = eigh(&hermitian_part(&(&costs[0] - &costs[1])));
        let cols: Vec<usize> = (0..dim).filter(|&k| vals[k] > 0.0).collect();
        let v = CMat::from_fn(dim, cols.len(), |r, k| vecs[(r, cols[k])]);
        let p = Operator::projector(&v);
        let q = Operator::identity(dim).sub(&p);
        return SubMeasurement::new(labels.to_vec(), vec![p, q]);
    }
    // shift and scale into [0, Id]; with sum_a P^a = Id this only moves the objective affinely
    let lo = costs.iter().map(|m| crate::quantum::min_eigenvalue(&hermitian_part(m))).fold(f64::INFINITY, f64::min);
    let hi = costs.iter().map(|m| crate::quantum::max_eigenvalue(&hermitian_part(m))).fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let shifted: Vec<Operator> = costs
        .iter()
        .map(|m| {
            let h = (hermitian_part(m) - CMat::identity(dim, dim) * c(lo)) / c(span);
            Operator::from_hermitian_part(&crate::quantum::spectral_map(&h.transpose(), |v| v.clamp(0.0, 1.0)))
        })
        .collect();
    let res = solve(&SdpInstance::new(crate::quantum::maximally_entangled(dim), shifted)?)?;
    let ops = res
        .operators()
        .iter()
        .map(|t| Operator::from_hermitian_part(&crate::quantum::spectral_map(t.matrix(), |v| v.max(0.0))))
        .collect();
    crate::sdp::complete_to_measurement(&SubMeasurement::from_parts_unchecked(labels.to_vec(), ops))
}

fn prob(p: &Prob) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

fn alice_step(game: &GameSpec, s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let m = s.psi.coeffs();
    let dim = m.nrows();
    let mut costs: Vec<Vec<CMat>> = game.alice_answers.iter().map(|a| vec![CMat::zeros(dim, dim); a.len()]).collect();
    for (k, &(qa, qb, ref p)) in game.distribution.iter().enumerate() {
        let sb = game.bob_answers[qb].len();
        for (a, cost) in costs[qa].iter_mut().enumerate() {
            for b in 0..sb {
                if game.accept(k, a, b) {
                    *cost += m * s.bob[qb].operator(b).matrix().transpose() * m.adjoint() * c(prob(p));
                }
            }
        }
    }
    let alice = costs
        .iter()
        .enumerate()
        .map(|(qa, cs)| best_measurement(cs, &game.alice_answers[qa]))
        .collect::<Result<Vec<_>>>()?;
    QuantumStrategy::new(s.psi.clone(), alice, s.bob.clone())
}

fn bob_step(game: &GameSpec, s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let m = s.psi.coeffs();
    let dim = m.nrows();
    let mut costs: Vec<Vec<CMat>> = game.bob_answers.iter().map(|a| vec![CMat::zeros(dim, dim); a.len()]).collect();
    for (k, &(qa, qb, ref p)) in game.distribution.iter().enumerate() {
        for a in 0..game.alice_answers[qa].len() {
            let inner = (m.adjoint() * s.alice[qa].operator(a).matrix() * m).transpose();
            for (b, cost) in costs[qb].iter_mut().enumerate() {
                if game.accept(k, a, b) {
                    *cost += &inner * c(prob(p));
                }
            }
        }
    }
    let bob = costs
        .iter()
        .enumerate()
        .map(|(qb, cs)| best_measurement(cs, &game.bob_answers[qb]))
        .collect::<Result<Vec<_>>>()?;
    QuantumStrategy::new(s.psi.clone(), s.alice.clone(), bob)
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    CMat::from_fn(n * m, n * m, |r, k| a[(r / m, k / m)] * b[(r % m, k % m)])
}

/// Top eigenvector of the game operator on the symmetric subspace.
fn state_step(game: &GameSpec, s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let dim = s.psi.dim();
    let n = dim * dim;
    let mut g = CMat::zeros(n, n);
    for (k, &(qa, qb, ref p)) in game.distribution.iter().enumerate() {
        let sb = game.bob_answers[qb].len();
        for a in 0..game.alice_answers[qa].len() {
            for b in 0..sb {
                if game.accept(k, a, b) {
                    g += kron(s.alice[qa].operator(a).matrix(), s.bob[qb].operator(b).matrix()) * c(prob(p));
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
    let iso = CMat::from_fn(n, pairs.len(), |r, k| {
        let (i, j) = pairs[k];
        let (x, y) = (r / dim, r % dim);
        if i == j {
            c(if x == i && y == i { 1.0 } else { 0.0 })
        } else if (x, y) == (i, j) || (x, y) == (j, i) {
            c(std::f64::consts::FRAC_1_SQRT_2)
        } else {
            c(0.0)
        }
    });
    let reduced = hermitian_part(&(iso.adjoint() * hermitian_part(&g) * &iso));
    let (_, vecs) = eigh(&reduced);
    let top = &iso * vecs.column(pairs.len() - 1);
    let m = CMat::from_fn(dim, dim, |i, j| top[i * dim + j]);
    let psi = BipartiteState::normalized(m)?;
    QuantumStrategy::new(psi, s.alice.clone(), s.bob.clone())
}

/// A test that reads three positions of an oracle: a distribution over query
/// triples and a predicate on the three answers.
#[derive(Clone, Debug)]
pub struct ThreeQueryTest {
    pub name: String,
    pub queries: Vec<String>,
    pub answers: Vec<Vec<String>>,
    pub triples: Vec<([usize; 3], Prob)>,
    /// Acceptance per triple, indexed by the mixed-radix answer tuple.
    pub accept: Vec<Vec<bool>>,
}

impl ThreeQueryTest {
    pub fn from_fn(
        name: impl Into<String>,
        queries: Vec<String>,
        answers: Vec<Vec<String>>,
        triples: Vec<([usize; 3], Prob)>,
        accept: impl Fn(usize, [usize; 3]) -> bool,
    ) -> Result<Self> {
        for (t, _) in &triples {
            if t.iter().any(|&q| q >= queries.len()) || answers.len() != queries.len() {
                return Err(Error::MalformedTest("triple references an unknown query".into()));
            }
        }
        let table = triples
            .iter()
            .enumerate()
            .map(|(k, (t, _))| {
                let r = [answers[t[0]].len(), answers[t[1]].len(), answers[t[2]].len()];
                (0..r[0] * r[1] * r[2]).map(|i| accept(k, [i / (r[1] * r[2]), (i / r[2]) % r[1], i % r[2]])).collect()
            })
            .collect();
        let test = ThreeQueryTest { name: name.into(), queries, answers, triples, accept: table };
        test.validate()?;
        Ok(test)
    }

    pub fn validate(&self) -> Result<()> {
        if self.queries.is_empty()
            || self.answers.len() != self.queries.len()
            || self.answers.iter().any(|a| a.is_empty())
        {
            return Err(Error::MalformedTest("queries need nonempty answer sets".into()));
        }
        let total = self.triples.iter().fold(Ratio::from_integer(0u64), |acc, (_, p)| acc + p);
        if total != Ratio::from_integer(1) {
            return Err(Error::MalformedTest(format!("triple distribution sums to {total}")));
        }
        if self.accept.len() != self.triples.len() {
            return Err(Error::MalformedTest("predicate table size".into()));
        }
        for ((t, _), row) in self.triples.iter().zip(&self.accept) {
            if t.iter().any(|&q| q >= self.queries.len()) {
                return Err(Error::MalformedTest("triple references an unknown query".into()));
            }
            if row.len() != t.iter().map(|&q| self.answers[q].len()).product::<usize>() {
                return Err(Error::MalformedTest("predicate row size".into()));
            }
        }
        Ok(())
    }

    fn radices(&self, k: usize) -> [usize; 3] {
        let t = self.triples[k].0;
        [self.answers[t[0]].len(), self.answers[t[1]].len(), self.answers[t[2]].len()]
    }

    pub fn passes(&self, k: usize, ans: [usize; 3]) -> bool {
        let r = self.radices(k);
        self.accept[k][(ans[0] * r[1] + ans[1]) * r[2] + ans[2]]
    }

    /// Exact acceptance probability of an oracle `f: query -> answer`.
    pub fn oracle_value(&self, f: &[usize]) -> Prob {
        self.triples
            .iter()
            .enumerate()
            .filter(|(k, (t, _))| self.passes(*k, [f[t[0]], f[t[1]], f[t[2]]]))
            .fold(Ratio::from_integer(0), |acc, (_, (_, p))| acc + p)
    }

    /// Best oracle by enumeration.
    pub fn best_oracle_value(&self) -> Result<Prob> {
        let space = GameSpec::strategy_space(&self.answers);
        if space > STRATEGY_GUARD {
            return Err(Error::SearchSpaceTooLarge { size: space, limit: STRATEGY_GUARD });
        }
        let radices: Vec<usize> = self.answers.iter().map(|a| a.len()).collect();
        Ok((0..space)
            .into_par_iter()
            .map(|mut idx| {
                let mut f = vec![0; radices.len()];
                for q in (0..radices.len()).rev() {
                    f[q] = (idx % radices[q] as u128) as usize;
                    idx /= radices[q] as u128;
                }
                self.oracle_value(&f)
            })
            .max()
            .unwrap_or_else(|| Ratio::from_integer(0)))
    }
}

/// Distinct query triples in first-occurrence order, and the group of each
/// weighted triple.
fn triple_groups(test: &ThreeQueryTest) -> (Vec<[usize; 3]>, Vec<usize>) {
    let mut index: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    let mut distinct = Vec::new();
    let group = test
        .triples
        .iter()
        .map(|(t, _)| {
            *index.entry(*t).or_insert_with(|| {
                distinct.push(*t);
                distinct.len() - 1
            })
        })
        .collect();
    (distinct, group)
}

/// Alice receives the whole triple and answers all three positions; Bob
/// receives the query at a uniformly random position `i`. Accept iff Alice's
/// triple passes the test and Bob's answer equals Alice's `i`-th answer.
/// Equal triples drawn by different sub-tests share one Alice question.
pub fn oracularize(test: &ThreeQueryTest) -> Result<GameSpec> {
    test.validate()?;
    let (distinct, group) = triple_groups(test);
    let alice_questions: Vec<String> = distinct
        .iter()
        .map(|t| format!("({},{},{})", test.queries[t[0]], test.queries[t[1]], test.queries[t[2]]))
        .collect();
    let alice_answers: Vec<Vec<String>> = distinct
        .iter()
        .map(|t| {
            let mut out = Vec::new();
            for a in &test.answers[t[0]] {
                for b in &test.answers[t[1]] {
                    for c3 in &test.answers[t[2]] {
                        out.push(format!("{a},{b},{c3}"));
                    }
                }
            }
            out
        })
        .collect();
    let mut distribution = Vec::with_capacity(3 * test.triples.len());
    for (k, (t, p)) in test.triples.iter().enumerate() {
        for &q in t {
            distribution.push((group[k], q, p * Ratio::new(1, 3)));
        }
    }
    GameSpec::from_fn(
        format!("oracularized-{}", test.name),
        alice_questions,
        test.queries.clone(),
        alice_answers,
        test.answers.clone(),
        distribution,
        |round, _, _, a, b| {
            let (k, i) = (round / 3, round % 3);
            let r = test.radices(k);
            let ans = [a / (r[1] * r[2]), (a / r[2]) % r[1], a % r[2]];
            test.passes(k, ans) && ans[i] == b
        },
        true,
    )
}

/// Alice's honest strategy from an oracle `f`, plus Bob answering with `f`.
pub fn oracle_strategy(test: &ThreeQueryTest, f: &[usize]) -> ClassicalStrategy {
    let (distinct, _) = triple_groups(test);
    let alice = distinct
        .iter()
        .map(|t| {
            let r = [test.answers[t[0]].len(), test.answers[t[1]].len(), test.answers[t[2]].len()];
            (f[t[0]] * r[1] + f[t[1]]) * r[2] + f[t[2]]
        })
        .collect();
    ClassicalStrategy { alice, bob: f.to_vec() }
}

/// `k` independent copies played at once, accepted iff every copy accepts.
pub fn parallel_repeat(game: &GameSpec, k: usize) -> Result<GameSpec> {
    if k == 0 {
        return Err(Error::InvalidParams("repetition count must be positive".into()));
    }
    if k == 1 {
        return Ok(game.clone());
    }
    let guard = |n: usize| (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    let max_ans = game.alice_answers.iter().chain(&game.bob_answers).map(|v| v.len()).max().unwrap_or(1);
    for size in [
        guard(game.alice_questions.len()),
        guard(game.bob_questions.len()),
        guard(game.distribution.len()),
        guard(max_ans),
    ] {
        if size > REPEAT_GUARD {
            return Err(Error::SearchSpaceTooLarge { size, limit: REPEAT_GUARD });
        }
    }
    let tuples = |n: usize| -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out.into_iter().flat_map(|t| (0..n).map(move |i| [t.clone(), vec![i]].concat())).collect();
        }
        out
    };
    let aq = tuples(game.alice_questions.len());
    let bq = tuples(game.bob_questions.len());
    let join = |labels: &[String], t: &[usize]| t.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>().join("|");
    let answer_sets = |answers: &[Vec<String>], t: &[usize]| -> Vec<String> {
        let mut out = vec![String::new()];
        for (pos, &q) in t.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|s| answers[q].iter().map(move |a| if pos == 0 { a.clone() } else { format!("{s}|{a}") }))
                .collect();
        }
        out
    };
    let index_of = |t: &[usize], n: usize| t.iter().fold(0usize, |acc, &i| acc * n + i);
    let combos = tuples(game.distribution.len());
    let mut distribution = Vec::with_capacity(combos.len());
    for combo in &combos {
        let mut ta = Vec::with_capacity(k);
        let mut tb = Vec::with_capacity(k);
        let mut p = Ratio::from_integer(1u64);
        for &e in combo {
            let (a, b, w) = game.distribution[e];
            ta.push(a);
            tb.push(b);
            p *= w;
        }
        distribution.push((index_of(&ta, game.alice_questions.len()), index_of(&tb, game.bob_questions.len()), p));
    }
    let alice_answers: Vec<Vec<String>> = aq.iter().map(|t| answer_sets(&game.alice_answers, t)).collect();
    let bob_answers: Vec<Vec<String>> = bq.iter().map(|t| answer_sets(&game.bob_answers, t)).collect();
    let digits = |mut idx: usize, t: &[usize], answers: &[Vec<String>]| -> Vec<usize> {
        let mut out = vec![0; t.len()];
        for pos in (0..t.len()).rev() {
            let r = answers[t[pos]].len();
            out[pos] = idx % r;
            idx /= r;
        }
        out
    };
    GameSpec::from_fn(
        format!("{}^{k}", game.name),
        aq.iter().map(|t| join(&game.alice_questions, t)).collect(),
        bq.iter().map(|t| join(&game.bob_questions, t)).collect(),
        alice_answers,
        bob_answers,
        distribution,
        |round, qa, qb, a, b| {
            let (ta, tb) = (&aq[qa], &bq[qb]);
            let da = digits(a, ta, &game.alice_answers);
            let db = digits(b, tb, &game.bob_answers);
            (0..k).all(|i| game.accept(combos[round][i], da[i], db[i]))
        },
        game.projection,
    )
}

/// The product strategy on `k` copies.
pub fn repeat_strategy(game: &GameSpec, s: &ClassicalStrategy, k: usize) -> ClassicalStrategy {
    let side = |table: &[usize], answers: &[Vec<String>]| -> Vec<usize> {
        let n = table.len();
        let total = n.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                let mut qs = vec![0; k];
                for pos in (0..k).rev() {
                    qs[pos] = idx % n;
                    idx /= n;
                }
                qs.iter().fold(0usize, |acc, &q| acc * answers[q].len() + table[q])
            })
            .collect()
    };
    ClassicalStrategy { alice: side(&s.alice, &game.alice_answers), bob: side(&s.bob, &game.bob_answers) }
}

/// Both players receive questions from the tagged union `A:qa` / `B:qb` and
/// the role assignment is averaged, so one set of operators can serve both.
pub fn symmetrize(game: &GameSpec) -> Result<GameSpec> {
    let na = game.alice_questions.len();
    let questions: Vec<String> = game
        .alice_questions
        .iter()
        .map(|q| format!("A:{q}"))
        .chain(game.bob_questions.iter().map(|q| format!("B:{q}")))
        .collect();
    let answers: Vec<Vec<String>> = game.alice_answers.iter().chain(&game.bob_answers).cloned().collect();
    let half = Ratio::new(1, 2);
    let mut distribution = Vec::new();
    for &(qa, qb, p) in &game.distribution {
        distribution.push((qa, na + qb, p * half));
        distribution.push((na + qb, qa, p * half));
    }
    GameSpec::from_fn(
        format!("{}-symmetrized", game.name),
        questions.clone(),
        questions,
        answers.clone(),
        answers,
        distribution,
        |round, _, _, a, b| if round % 2 == 0 { game.accept(round / 2, a, b) } else { game.accept(round / 2, b, a) },
        false,
    )
}

/// The optimal CHSH strategy: maximally entangled qubits, Alice measuring
/// at angles `0, pi/4`, Bob at `pi/8, -pi/8` (real rotations).
pub fn chsh_optimal_strategy() -> QuantumStrategy {
    let proj = |theta: f64| -> SubMeasurement {
        let v = CMat::from_column_slice(2, 1, &[c(theta.cos()), c(theta.sin())]);
        let p = Operator::projector(&v);
        SubMeasurement::indexed(vec![p.clone(), Operator::identity(2).sub(&p)]).expect("projective")
    };
    let pi = std::f64::consts::PI;
    QuantumStrategy::new(
        crate::quantum::maximally_entangled(2),
        vec![proj(0.0), proj(pi / 4.0)],
        vec![proj(pi / 8.0), proj(-pi / 8.0)],
    )
    .expect("valid strategy")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_value(game: &GameSpec) -> Prob {
        // every deterministic pair, no best-response shortcut
        let ra: Vec<usize> = (0..game.alice_questions.len()).map(|q| game.alice_answers(q).len()).collect();
        let rb: Vec<usize> = (0..game.bob_questions.len()).map(|q| game.bob_answers(q).len()).collect();
        let all = |r: &[usize]| -> Vec<Vec<usize>> {
            let mut out = vec![vec![]];
            for &n in r {
                out = out.into_iter().flat_map(|t| (0..n).map(move |i| [t.clone(), vec![i]].concat())).collect();
            }
            out
        };
        let mut best = Ratio::from_integer(0);
        for a in all(&ra) {
            for b in all(&rb) {
                let v = classical_strategy_value(game, &ClassicalStrategy { alice: a.clone(), bob: b }).unwrap();
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn chsh_classical_value() {
        let g = GameSpec::chsh();
        let (v, s) = classical_value_exact(&g).unwrap();
        assert_eq!(v, Ratio::new(3, 4));
        assert_eq!(brute_force_value(&g), Ratio::new(3, 4));
        assert_eq!(classical_strategy_value(&g, &s).unwrap(), v);
    }

    #[test]
    fn trivial_games() {
        assert_eq!(classical_value_exact(&GameSpec::accept_all(3, 2)).unwrap().0, Ratio::from_integer(1));
        assert_eq!(classical_value_exact(&GameSpec::reject_all(2, 2)).unwrap().0, Ratio::from_integer(0));
        assert_eq!(classical_value_exact(&GameSpec::equality(3, 3)).unwrap().0, Ratio::from_integer(1));
    }

    #[test]
    fn chsh_optimal_quantum_value() {
        let g = GameSpec::chsh();
        let v = quantum_strategy_value(&g, &chsh_optimal_strategy()).unwrap();
        let target = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((v - target).abs() < 1e-6, "{v}");
    }

    #[test]
    fn embedding_matches_classical_value() {
        let g = GameSpec::chsh();
        for idx in 0..16usize {
            let s =
                ClassicalStrategy { alice: vec![idx & 1, (idx >> 1) & 1], bob: vec![(idx >> 2) & 1, (idx >> 3) & 1] };
            let exact = classical_strategy_value(&g, &s).unwrap();
            let q = quantum_strategy_value(&g, &s.embed(&g).unwrap()).unwrap();
            assert!((q - prob(&exact)).abs() < 1e-12);
        }
        let mix = vec![
            (ClassicalStrategy { alice: vec![0, 0], bob: vec![0, 0] }, 0.25),
            (ClassicalStrategy { alice: vec![1, 0], bob: vec![0, 1] }, 0.75),
        ];
        let expected: f64 = mix.iter().map(|(s, p)| p * prob(&classical_strategy_value(&g, s).unwrap())).sum();
        let q = quantum_strategy_value(&g, &embed_mixture(&g, &mix).unwrap()).unwrap();
        assert!((q - expected).abs() < 1e-12);
    }

    #[test]
    fn seesaw_reaches_chsh_bound() {
        let g = GameSpec::chsh();
        let out = seesaw_best_of(&g, 2, &[1, 2, 3, 4, 5], 50).unwrap();
        assert!(out.lower_bound >= 0.853, "{}", out.lower_bound);
        for run in [1u64, 2, 3] {
            let r = seesaw_lower_bound(&g, 2, run, 50).unwrap();
            assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        }
    }

    #[test]
    fn seesaw_reaches_classical_value_of_equality_game() {
        let g = GameSpec::equality(2, 2);
        let out = seesaw_best_of(&g, 2, &[7, 8], 50).unwrap();
        assert!((out.lower_bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seesaw_three_outcome_game() {
        let g = GameSpec::equality(2, 3);
        let out = seesaw_lower_bound(&g, 3, 9, 20).unwrap();
        assert!(out.lower_bound > 0.99, "{}", out.lower_bound);
    }

    #[test]
    fn parallel_repetition_of_chsh() {
        let g = GameSpec::chsh();
        assert_eq!(parallel_repeat(&g, 1).unwrap(), g);
        let g2 = parallel_repeat(&g, 2).unwrap();
        let (v1, s1) = classical_value_exact(&g).unwrap();
        let (v2, _) = classical_value_exact(&g2).unwrap();
        assert!(v2 >= v1 * v1);
        let prod = repeat_strategy(&g, &s1, 2);
        assert_eq!(classical_strategy_value(&g2, &prod).unwrap(), v1 * v1);
        for idx in [0usize, 5, 11] {
            let s =
                ClassicalStrategy { alice: vec![idx & 1, (idx >> 1) & 1], bob: vec![(idx >> 2) & 1, (idx >> 3) & 1] };
            let v = classical_strategy_value(&g, &s).unwrap();
            assert_eq!(classical_strategy_value(&g2, &repeat_strategy(&g, &s, 2)).unwrap(), v * v);
        }
    }

    fn linearity_test(n: usize) -> ThreeQueryTest {
        let size = 1usize << n;
        let p = Ratio::new(1, (size * size) as u64);
        let triples = (0..size).flat_map(|u| (0..size).map(move |v| ([u, v, u ^ v], p))).collect();
        ThreeQueryTest::from_fn(
            "blr",
            (0..size).map(|u| format!("{u:0n$b}")).collect(),
            vec![vec!["0".into(), "1".into()]; size],
            triples,
            |_, a| a[0] ^ a[1] == a[2],
        )
        .unwrap()
    }

    #[test]
    fn oracularization_keeps_completeness_and_relates_values() {
        let t = linearity_test(2);
        let g = oracularize(&t).unwrap();
        assert!(g.is_projection());
        let f: Vec<usize> = (0..4).map(|u| (u & 1) ^ ((u >> 1) & 1)).collect();
        assert_eq!(classical_strategy_value(&g, &oracle_strategy(&t, &f)).unwrap(), Ratio::from_integer(1));

        // a test that accepts only some answers, so no oracle is perfect
        let triples = vec![([0, 1, 2], Ratio::new(1, 2)), ([0, 0, 1], Ratio::new(1, 2))];
        let picky = ThreeQueryTest::from_fn(
            "picky",
            vec!["p".into(), "q".into(), "r".into()],
            vec![vec!["0".into(), "1".into()]; 3],
            triples,
            |k, a| {
                if k == 0 {
                    a == [0, 1, 1]
                } else {
                    a == [1, 1, 0]
                }
            },
        )
        .unwrap();
        let w_t = picky.best_oracle_value().unwrap();
        let (w_g, _) = classical_value_exact(&oracularize(&picky).unwrap()).unwrap();
        assert!(w_g >= w_t);
        assert!(w_g <= Ratio::from_integer(1) - (Ratio::from_integer(1) - w_t) / 3);
    }

    #[test]
    fn rejecting_test_gives_value_zero() {
        let triples = vec![([0, 1, 0], Ratio::from_integer(1))];
        let t = ThreeQueryTest::from_fn(
            "never",
            vec!["a".into(), "b".into()],
            vec![vec!["0".into(), "1".into()]; 2],
            triples,
            |_, _| false,
        )
        .unwrap();
        assert_eq!(classical_value_exact(&oracularize(&t).unwrap()).unwrap().0, Ratio::from_integer(0));
    }

    #[test]
    fn malformed_tests_are_rejected() {
        let triples = vec![([0, 1, 5], Ratio::from_integer(1))];
        assert!(matches!(
            ThreeQueryTest::from_fn("bad", vec!["a".into(), "b".into()], vec![vec!["0".into()]; 2], triples, |_, _| {
                true
            }),
            Err(Error::MalformedTest(_))
        ));
        let triples = vec![([0, 1, 0], Ratio::new(1, 2))];
        assert!(ThreeQueryTest::from_fn(
            "bad",
            vec!["a".into(), "b".into()],
            vec![vec!["0".into()]; 2],
            triples,
            |_, _| true
        )
        .is_err());
    }

    #[test]
    fn symmetrized_game_preserves_values() {
        let g = GameSpec::chsh();
        let sym = symmetrize(&g).unwrap();
        assert_eq!(sym.alice_questions(), sym.bob_questions());
        let (v, _) = classical_value_exact(&sym).unwrap();
        assert!(v >= Ratio::new(3, 4));
        // shared operators: A-questions use Alice's, B-questions use Bob's
        let opt = chsh_optimal_strategy();
        let shared: Vec<SubMeasurement> = opt.alice().iter().chain(opt.bob()).cloned().collect();
        let s = QuantumStrategy::symmetric(opt.psi().clone(), shared).unwrap();
        let val = quantum_strategy_value(&sym, &s).unwrap();
        assert!((val - (std::f64::consts::PI / 8.0).cos().powi(2)).abs() < 1e-9);
        let z: crate::quantum::C64 = opt.psi().pair(opt.alice()[0].operator(0), opt.bob()[1].operator(1));
        assert!(z.im.abs() < 1e-10);
    }

    #[test]
    fn game_json_round_trip() {
        for g in [
            GameSpec::chsh(),
            parallel_repeat(&GameSpec::chsh(), 2).unwrap(),
            symmetrize(&GameSpec::equality(2, 2)).unwrap(),
        ] {
            let js = serde_json::to_string(&g).unwrap();
            let back: GameSpec = serde_json::from_str(&js).unwrap();
            assert_eq!(classical_value_exact(&back).unwrap().0, classical_value_exact(&g).unwrap().0);
        }
        let bad = r#"{"name":"x","alice_questions":["a"],"bob_questions":["b"],"alice_answers":["0"],"bob_answers":["0"],"distribution":[{"alice":0,"bob":0,"p":[1,2]}],"builtin":"accept-all"}"#;
        assert!(serde_json::from_str::<GameSpec>(bad).is_err());
        let ok = r#"{"name":"x","alice_questions":["a"],"bob_questions":["b"],"alice_answers":["0","1"],"bob_answers":["0","1"],"distribution":[{"alice":0,"bob":0,"p":[1,2],"accept":[[1,1]]},{"alice":0,"bob":0,"p":[1,2],"accept":[[0,0]]}],"projection":true}"#;
        let g: GameSpec = serde_json::from_str(ok).unwrap();
        assert!(g.accept(0, 1, 1) && !g.accept(0, 0, 0) && g.accept(1, 0, 0));
        assert_eq!(classical_value_exact(&g).unwrap().0, Ratio::new(1, 2));
        let back: GameSpec = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn projection_flag_is_verified() {
        let bad = GameSpec::from_fn(
            "two-b",
            vec!["a".into()],
            vec!["b".into()],
            vec![vec!["0".into()]],
            vec![vec!["0".into(), "1".into()]],
            vec![(0, 0, Ratio::from_integer(1))],
            |_, _, _, _, _| true,
            true,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let g = GameSpec::chsh();
        let s = ClassicalStrategy { alice: vec![0, 0], bob: vec![0, 0] };
        let est = classical_value_mc(&g, &s, 20_000, 3).unwrap();
        assert!((est.mean - 0.75).abs() <= 4.0 * est.stderr);
        assert_eq!(est, classical_value_mc(&g, &s, 20_000, 3).unwrap());
        let q = quantum_value_mc(&g, &chsh_optimal_strategy(), 20_000, 4).unwrap();
        assert!((q.mean - 0.853_553).abs() <= 4.0 * q.stderr);
    }

    #[test]
    fn coverage_gaps_are_reported() {
        let g = GameSpec::chsh();
        let s = ClassicalStrategy { alice: vec![0], bob: vec![0, 0] };
        assert!(matches!(classical_strategy_value(&g, &s), Err(Error::CoverageGap(_))));
    }
}
