//! Executable versions of the plane-vs-point low-degree test, the
//! oracularized linearity test and the two-prover QUADEQ test.

mod ldt;
mod linearity;
mod quadeq;

pub use ldt::*;
pub use linearity::*;
pub use quadeq::*;

use crate::error::{Error, Result};
use crate::game::{ClassicalStrategy, GameSpec};

fn bit_labels(a: &[String]) -> Option<Vec<[usize; 3]>> {
    if a.len() != 8 {
        return None;
    }
    let mut out = Vec::with_capacity(8);
    for (idx, label) in a.iter().enumerate() {
        let bits: Vec<usize> =
            label.split(',').map(|s| s.parse::<usize>()).collect::<std::result::Result<_, _>>().ok()?;
        if bits.len() != 3 || bits.iter().any(|&b| b > 1) || (bits[0] * 2 + bits[1]) * 2 + bits[2] != idx {
            return None;
        }
        out.push([bits[0], bits[1], bits[2]]);
    }
    Some(out)
}

/// Per Alice question: whether it carries bit triples, and for each prefix
/// the only third bit any round accepts.
#[allow(clippy::type_complexity)]
fn implied_bits(game: &GameSpec) -> Result<(Vec<bool>, Vec<[Option<usize>; 4]>)> {
    let na = game.alice_questions().len();
    let triple: Vec<bool> = (0..na).map(|q| bit_labels(game.alice_answers(q)).is_some()).collect();
    if !triple.iter().any(|&t| t) {
        return Err(Error::InvalidGame("no Alice question carries an answer triple".into()));
    }
    let mut implied: Vec<[Option<usize>; 4]> = vec![[None; 4]; na];
    for (k, &(qa, _, _)) in game.distribution().iter().enumerate() {
        if !triple[qa] {
            continue;
        }
        for a in 0..8 {
            if (0..2).any(|b| game.accept(k, a, b)) {
                let slot = &mut implied[qa][a / 2];
                match *slot {
                    Some(prev) if prev != a % 2 => {
                        return Err(Error::InvalidGame(format!(
                            "prefix {} of question {} admits both third bits",
                            a / 2,
                            game.alice_questions()[qa]
                        )));
                    }
                    _ => *slot = Some(a % 2),
                }
            }
        }
    }
    Ok((triple, implied))
}

/// Drops the third element of Alice's answer triples. Every Alice question
/// with answers `"a1,a2,a3"` over bits keeps only `(a1, a2)`; the third bit is
/// the unique value the verifier can accept for that prefix. Other questions
/// are left as they are. Strategies whose triples carry that implied bit
/// correspond one-to-one and keep their value.
pub fn answer_trim(game: &GameSpec) -> Result<GameSpec> {
    let nb = game.bob_questions().len();
    if (0..nb).any(|q| game.bob_answers(q).len() != 2) {
        return Err(Error::InvalidGame("answer trimming needs single-bit Bob answers".into()));
    }
    let (triple, implied) = implied_bits(game)?;
    let na = triple.len();
    let full = |qa: usize, a: usize| -> usize {
        if triple[qa] {
            a * 2 + implied[qa][a].unwrap_or(0)
        } else {
            a
        }
    };
    let alice_answers: Vec<Vec<String>> = (0..na)
        .map(|q| {
            if triple[q] {
                vec!["0,0".into(), "0,1".into(), "1,0".into(), "1,1".into()]
            } else {
                game.alice_answers(q).to_vec()
            }
        })
        .collect();
    GameSpec::from_fn(
        format!("{}-trimmed", game.name()),
        game.alice_questions().to_vec(),
        game.bob_questions().to_vec(),
        alice_answers,
        (0..nb).map(|q| game.bob_answers(q).to_vec()).collect(),
        game.distribution().to_vec(),
        |k, qa, _, a, b| game.accept(k, full(qa, a), b),
        game.projection_claimed(),
    )
}

/// Inverse of trimming: extends each answer pair of a trimmed-game strategy
/// by the implied third bit, giving a strategy of the untrimmed `game`.
pub fn lift_strategy(game: &GameSpec, s: &ClassicalStrategy) -> Result<ClassicalStrategy> {
    let (triple, implied) = implied_bits(game)?;
    if s.alice.len() != triple.len() {
        return Err(Error::ShapeMismatch(format!(
            "strategy has {} Alice answers for {} questions",
            s.alice.len(),
            triple.len()
        )));
    }
    let alice = s
        .alice
        .iter()
        .enumerate()
        .map(|(q, &a)| if triple[q] { a * 2 + implied[q].get(a).copied().flatten().unwrap_or(0) } else { a })
        .collect();
    Ok(ClassicalStrategy { alice, bob: s.bob.clone() })
}

/// Maps a strategy of the untrimmed game to the trimmed one.
pub fn trim_strategy(game: &GameSpec, s: &ClassicalStrategy) -> ClassicalStrategy {
    let alice = s
        .alice
        .iter()
        .enumerate()
        .map(|(q, &a)| if bit_labels(game.alice_answers(q)).is_some() { a / 2 } else { a })
        .collect();
    ClassicalStrategy { alice, bob: s.bob.clone() }
}

/// Bits of `v` as a string, least significant first.
pub(crate) fn bit_string(v: u128, len: usize) -> String {
    (0..len).map(|i| if (v >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

pub(crate) fn parity(v: u128) -> bool {
    v.count_ones() % 2 == 1
}
