use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{answer_trim, bit_string, parity, trim_strategy};
use crate::error::{Error, Result};
use crate::game::{oracle_strategy, oracularize, ClassicalStrategy, GameSpec, ThreeQueryTest};
use crate::rng::{binomial_stderr, trial_rng};

/// Largest `n` for the explicit game (`3 * 4^n` rounds).
pub const LINEARITY_EXPLICIT_MAX_BITS: usize = 8;
/// Largest `n` for table-based sampling.
pub const LINEARITY_MAX_BITS: usize = 20;

/// The three-query BLR test on `F_2^n`: query `u`, `v`, `u + v` and accept
/// iff the third answer is the sum of the first two.
pub fn blr_test(n: usize) -> Result<ThreeQueryTest> {
    if n == 0 || n > LINEARITY_EXPLICIT_MAX_BITS {
        return Err(Error::SearchSpaceTooLarge {
            size: 1u128 << (2 * n.min(63)),
            limit: 1 << (2 * LINEARITY_EXPLICIT_MAX_BITS),
        });
    }
    let size = 1usize << n;
    let p = Ratio::new(1, (size * size) as u64);
    let triples = (0..size).flat_map(|u| (0..size).map(move |v| ([u, v, u ^ v], p))).collect();
    ThreeQueryTest::from_fn(
        format!("blr-{n}"),
        (0..size).map(|u| bit_string(u as u128, n)).collect(),
        vec![vec!["0".into(), "1".into()]; size],
        triples,
        |_, a| a[0] ^ a[1] == a[2],
    )
}

/// The oracularized linearity game with its honest-strategy factory.
#[derive(Clone, Debug)]
pub struct LinearityGame {
    pub n: usize,
    pub trimmed: bool,
    pub game: GameSpec,
    test: ThreeQueryTest,
    untrimmed: GameSpec,
}

/// Alice receives `(u, v)` and answers `(a1, a2)` with `a3 = a1 + a2`
/// implied; Bob receives `u`, `v` or `u + v` uniformly. `trimmed = false`
/// keeps Alice's full answer triple.
pub fn linearity_game(n: usize, trimmed: bool) -> Result<LinearityGame> {
    let test = blr_test(n)?;
    let untrimmed = oracularize(&test)?;
    let game = if trimmed { answer_trim(&untrimmed)? } else { untrimmed.clone() };
    Ok(LinearityGame { n, trimmed, game, test, untrimmed })
}

impl LinearityGame {
    /// Both players answer from the table `f` (indexed by query as an integer).
    pub fn strategy_from_function(&self, f: &[bool]) -> Result<ClassicalStrategy> {
        if f.len() != 1 << self.n {
            return Err(Error::CoverageGap(format!("function table has {} of {} entries", f.len(), 1usize << self.n)));
        }
        let f: Vec<usize> = f.iter().map(|&b| usize::from(b)).collect();
        let s = oracle_strategy(&self.test, &f);
        Ok(if self.trimmed { trim_strategy(&self.untrimmed, &s) } else { s })
    }

    /// The honest strategy for `f(u) = u . s`.
    pub fn honest(&self, s: u64) -> Result<ClassicalStrategy> {
        self.strategy_from_function(&linear_function(self.n, s))
    }
}

/// Table of `u -> u . s` on `F_2^n`.
pub fn linear_function(n: usize, s: u64) -> Vec<bool> {
    (0..1u64 << n).map(|u| parity((u & s) as u128)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearityStats {
    pub trials: u64,
    pub accepted: u64,
    pub acceptance: f64,
    pub stderr: f64,
}

fn check_tables(n: usize, alice: &[bool], bob: &[bool]) -> Result<()> {
    if n == 0 || n > LINEARITY_MAX_BITS {
        return Err(Error::InvalidParams(format!("linearity test needs 1 <= n <= {LINEARITY_MAX_BITS}")));
    }
    for t in [alice, bob] {
        if t.len() != 1 << n {
            return Err(Error::CoverageGap(format!("function table has {} of {} entries", t.len(), 1usize << n)));
        }
    }
    Ok(())
}

fn linearity_round(alice: &[bool], bob: &[bool], u: usize, v: usize, i: usize) -> bool {
    let (a1, a2) = (alice[u], alice[v]);
    match i {
        0 => bob[u] == a1,
        1 => bob[v] == a2,
        _ => bob[u ^ v] == (a1 ^ a2),
    }
}

/// Samples the oracularized test with Alice answering `(f(u), f(v))` from
/// `alice` and Bob from `bob`; trial `t` uses stream `t` of `seed`.
pub fn linearity_run(n: usize, alice: &[bool], bob: &[bool], trials: u64, seed: u64) -> Result<LinearityStats> {
    check_tables(n, alice, bob)?;
    let size = 1usize << n;
    let accepted: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u = rng.gen_range(0..size);
            let v = rng.gen_range(0..size);
            let i = rng.gen_range(0..3);
            u64::from(linearity_round(alice, bob, u, v, i))
        })
        .sum();
    let acceptance = if trials == 0 { 0.0 } else { accepted as f64 / trials as f64 };
    Ok(LinearityStats { trials, accepted, acceptance, stderr: binomial_stderr(acceptance, trials) })
}

/// Exact acceptance by enumerating every `(u, v, i)`.
pub fn linearity_exact(n: usize, alice: &[bool], bob: &[bool]) -> Result<Ratio<u64>> {
    check_tables(n, alice, bob)?;
    if n > 12 {
        return Err(Error::SearchSpaceTooLarge { size: 3u128 << (2 * n), limit: 3 << 24 });
    }
    let size = 1usize << n;
    let accepted: u64 = (0..size)
        .into_par_iter()
        .map(|u| {
            (0..size).map(|v| (0..3).filter(|&i| linearity_round(alice, bob, u, v, i)).count() as u64).sum::<u64>()
        })
        .sum();
    Ok(Ratio::new(accepted, 3 * (size * size) as u64))
}
