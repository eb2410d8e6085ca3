use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;
use twoprover::game::{classical_strategy_value, symmetrize, ClassicalStrategy, GameSpec, Prob};
use twoprover::protocols::{
    linear_function, linearity_exact, linearity_game, linearity_run, quadeq_exact, quadeq_game, quadeq_run,
    AssignmentOracle, LinearityStats, QuadeqExact, QuadeqInstance, QuadeqMixture, QuadeqStats, QuadeqStep,
    DUMMY_QUESTION, LINEARITY_EXPLICIT_MAX_BITS,
};
use twoprover::registry::{prob_f64, split_selector, value_methods, StrategyInput, ValueArgs, ValueOutcome};
use twoprover::rng::trial_rng;

use crate::args::{Generator, LinearityArgs, QuadeqArgs, ValueCmdArgs};
use crate::ldt::{compare, Comparison};
use crate::report::render;
use crate::{need_seed, read_json, usage, CliResult};

const FUNCTION_STREAM: u64 = u64::MAX;

fn bits_to_string(f: &[bool]) -> String {
    f.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses `linear:S[+flip:P,...]`, `const:B`, `bits:...` or `random`.
fn parse_function(text: &str, n: usize, seed: Option<u64>) -> CliResult<Vec<bool>> {
    let size = 1usize << n;
    let bad = || usage(format!("bad function '{text}'"));
    let (base, flips) = match text.split_once("+flip:") {
        Some((b, f)) => (b, Some(f)),
        None => (text, None),
    };
    let mut f = match split_selector(base) {
        ("linear", Some(s)) => {
            let s: u64 = s.parse().map_err(|_| bad())?;
            if s >= size as u64 {
                return Err(usage(format!("linear:{s} needs s < 2^{n}")));
            }
            linear_function(n, s)
        }
        ("const", Some("0")) => vec![false; size],
        ("const", Some("1")) => vec![true; size],
        ("bits", Some(b)) if b.len() == size && b.chars().all(|c| c == '0' || c == '1') => {
            b.chars().map(|c| c == '1').collect()
        }
        ("random", None) => {
            let mut rng = trial_rng(need_seed(seed, "a random function")?, FUNCTION_STREAM);
            (0..size).map(|_| rng.gen()).collect()
        }
        _ => return Err(bad()),
    };
    if let Some(list) = flips {
        for p in list.split(',') {
            let p: usize = p.parse().map_err(|_| bad())?;
            if p >= size {
                return Err(usage(format!("flip point {p} outside 0..{size}")));
            }
            f[p] = !f[p];
        }
    }
    Ok(f)
}

#[derive(Serialize)]
struct ExactValue {
    acceptance: Prob,
    rejection: Prob,
    acceptance_decimal: f64,
}

impl ExactValue {
    fn new(p: Prob) -> Self {
        ExactValue { acceptance: p, rejection: Ratio::from_integer(1) - p, acceptance_decimal: prob_f64(p) }
    }
}

#[derive(Serialize)]
struct GameView {
    name: String,
    alice_questions: usize,
    bob_questions: usize,
    /// Answer-set sizes, deduplicated and sorted.
    alice_answer_sizes: Vec<usize>,
    bob_answer_sizes: Vec<usize>,
    rounds: usize,
    projection: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy_value: Option<ExactValue>,
}

impl GameView {
    fn new(g: &GameSpec, value: Option<Prob>) -> Self {
        let sizes = |n: usize, f: &dyn Fn(usize) -> usize| {
            let mut v: Vec<usize> = (0..n).map(f).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        GameView {
            name: g.name().to_string(),
            alice_questions: g.alice_questions().len(),
            bob_questions: g.bob_questions().len(),
            alice_answer_sizes: sizes(g.alice_questions().len(), &|q| g.alice_answers(q).len()),
            bob_answer_sizes: sizes(g.bob_questions().len(), &|q| g.bob_answers(q).len()),
            rounds: g.distribution().len(),
            projection: g.is_projection(),
            strategy_value: value.map(ExactValue::new),
        }
    }
}

#[derive(Serialize)]
struct LinearityResult {
    n: usize,
    alice_function: String,
    bob_function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<LinearityStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    game: Option<GameView>,
}

pub fn run_linearity(a: &LinearityArgs) -> CliResult<String> {
    if a.trials == 0 && !a.exhaustive && !a.explicit_game {
        return Err(usage("give --trials, --exhaustive or --explicit-game"));
    }
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let seed = if a.trials > 0 { Some(need_seed(a.common.seed, "sampling")?) } else { a.common.seed };
    let alice = parse_function(&a.function, a.n, seed)?;
    let bob = match &a.bob_function {
        Some(s) => parse_function(s, a.n, seed)?,
        None => alice.clone(),
    };
    let sampled = (a.trials > 0).then(|| linearity_run(a.n, &alice, &bob, a.trials, seed.unwrap_or(0))).transpose()?;
    let exact = a.exhaustive.then(|| linearity_exact(a.n, &alice, &bob)).transpose()?;
    let comparison = match (&sampled, exact) {
        (Some(s), Some(e)) => Some(compare(s.acceptance, prob_f64(e), s.trials)),
        _ => None,
    };
    let game = if a.explicit_game {
        if a.n > LINEARITY_EXPLICIT_MAX_BITS {
            return Err(usage(format!("--explicit-game needs n <= {LINEARITY_EXPLICIT_MAX_BITS}")));
        }
        let g = linearity_game(a.n, !a.untrimmed)?;
        let s = g.strategy_from_function(&alice)?;
        let s = ClassicalStrategy { alice: s.alice, bob: bob.iter().map(|&b| usize::from(b)).collect() };
        Some(GameView::new(&g.game, Some(classical_strategy_value(&g.game, &s)?)))
    } else {
        None
    };
    let result = LinearityResult {
        n: a.n,
        alice_function: bits_to_string(&alice),
        bob_function: bits_to_string(&bob),
        sampled,
        exact: exact.map(ExactValue::new),
        comparison,
        game,
    };
    render("linearity", a.common.format, a, &result)
}

fn parse_mix(s: &str) -> CliResult<[Prob; 4]> {
    let parts: Vec<Prob> = s
        .split(',')
        .map(|p| p.trim().parse::<Prob>().map_err(|_| usage(format!("bad probability '{p}'"))))
        .collect::<CliResult<_>>()?;
    parts.try_into().map_err(|_| usage(format!("'{s}' needs four probabilities")))
}

/// Bit strings list the first variable first.
fn parse_assignment(s: &str, n: usize) -> CliResult<u128> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(usage(format!("'{s}' is not a {n}-bit string")));
    }
    Ok(s.chars().enumerate().fold(0u128, |acc, (i, c)| if c == '1' { acc | 1 << i } else { acc }))
}

fn parse_quadeq_strategy(text: &str, inst: &QuadeqInstance) -> CliResult<AssignmentOracle> {
    let n = inst.n();
    match split_selector(text) {
        ("honest", None) => Ok(AssignmentOracle::honest(inst)?),
        ("assignment", Some(x)) => Ok(AssignmentOracle::from_assignment(n, parse_assignment(x, n)?)),
        ("tensor", Some(xy)) => {
            let (x, y) = xy.split_once(',').ok_or_else(|| usage("tensor:X,Y needs two bit strings"))?;
            Ok(AssignmentOracle::with_tensor(n, parse_assignment(x, n)?, parse_assignment(y, n)?))
        }
        _ => Err(usage(format!("unknown quadeq strategy '{text}'"))),
    }
}

#[derive(Serialize)]
struct StepRate {
    step: QuadeqStep,
    rounds: u64,
    accepted: u64,
    acceptance: f64,
}

#[derive(Serialize)]
struct QuadeqSampled {
    #[serde(flatten)]
    stats: QuadeqStats,
    rates: Vec<StepRate>,
}

#[derive(Serialize)]
struct QuadeqExactView {
    #[serde(flatten)]
    exact: QuadeqExact,
    acceptance_decimal: f64,
}

#[derive(Serialize)]
struct BreakdownCheck {
    /// Exact: `sum_s weight_s * acceptance_s == acceptance`.
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_sum_matches: Option<bool>,
    /// Sampled: per-step accepted counts add up to the total.
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled_sum_matches: Option<bool>,
}

#[derive(Serialize)]
struct QuadeqResult {
    instance: QuadeqInstance,
    witness_present: bool,
    strategy: String,
    mixture: QuadeqMixture,
    weights: Vec<(QuadeqStep, Prob)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<QuadeqSampled>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<QuadeqExactView>,
    breakdown: BreakdownCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    game: Option<GameView>,
}

pub fn run_quadeq(a: &QuadeqArgs) -> CliResult<String> {
    if a.trials == 0 && !a.exhaustive && !a.explicit_game {
        return Err(usage("give --trials, --exhaustive or --explicit-game"));
    }
    let inst = match (&a.instance, a.generate) {
        (Some(p), None) => read_json(p)?,
        (None, Some(g)) => {
            let s = a.instance_seed.map_or_else(|| need_seed(a.common.seed, "instance generation"), Ok)?;
            match g {
                Generator::Satisfiable => QuadeqInstance::satisfiable(a.n, a.k, s)?,
                Generator::Contradictory => QuadeqInstance::contradictory(a.n, a.k, s)?,
            }
        }
        _ => return Err(usage("give exactly one of --instance and --generate")),
    };
    let seed = if a.trials > 0 { Some(need_seed(a.common.seed, "sampling")?) } else { a.common.seed };
    let mixture = QuadeqMixture { steps: parse_mix(&a.steps)?, linearity: parse_mix(&a.linearity_mix)? };
    mixture.validate().map_err(|e| usage(e.to_string()))?;
    let oracle = parse_quadeq_strategy(&a.strategy, &inst)?;
    let sampled = (a.trials > 0)
        .then(|| quadeq_run(&inst, &mixture, &oracle, &oracle, a.trials, seed.unwrap_or(0)))
        .transpose()?;
    let exact = a.exhaustive.then(|| quadeq_exact(&inst, &mixture, &oracle, &oracle)).transpose()?;
    let breakdown = BreakdownCheck {
        exact_sum_matches: exact.as_ref().map(|e| {
            e.per_step.iter().fold(Ratio::from_integer(0), |acc, s| acc + s.weight * s.acceptance) == e.acceptance
        }),
        sampled_sum_matches: sampled.as_ref().map(|s| {
            s.per_step.iter().map(|p| p.accepted).sum::<u64>() == s.accepted
                && s.per_step.iter().map(|p| p.rounds).sum::<u64>() == s.trials
        }),
    };
    let comparison = match (&sampled, &exact) {
        (Some(s), Some(e)) => Some(compare(s.acceptance, prob_f64(e.acceptance), s.trials)),
        _ => None,
    };
    let game = if a.explicit_game {
        let g = quadeq_game(&inst, &mixture, true)?;
        let value = classical_strategy_value(&g.game, &g.strategy_from_oracle(&oracle))?;
        let mut view = GameView::new(&g.game, Some(value));
        let dummy = g.game.alice_questions().iter().position(|q| q == DUMMY_QUESTION);
        if let Some(d) = dummy {
            let mut sizes: Vec<usize> = (0..g.game.alice_questions().len())
                .filter(|&q| q != d)
                .map(|q| g.game.alice_answers(q).len())
                .collect();
            sizes.sort_unstable();
            sizes.dedup();
            view.alice_answer_sizes = sizes;
        }
        Some(view)
    } else {
        None
    };
    let weights = QuadeqStep::ALL.into_iter().zip(mixture.weights()).collect();
    let result = QuadeqResult {
        witness_present: inst.witness().is_some(),
        instance: inst,
        strategy: a.strategy.clone(),
        mixture,
        weights,
        sampled: sampled.map(|stats| QuadeqSampled {
            rates: stats
                .per_step
                .iter()
                .map(|p| StepRate {
                    step: p.step,
                    rounds: p.rounds,
                    accepted: p.accepted,
                    acceptance: if p.rounds == 0 { 0.0 } else { p.accepted as f64 / p.rounds as f64 },
                })
                .collect(),
            stats,
        }),
        exact: exact.map(|e| QuadeqExactView { acceptance_decimal: prob_f64(e.acceptance), exact: e }),
        breakdown,
        comparison,
        game,
    };
    render("quadeq", a.common.format, a, &result)
}

#[derive(Serialize)]
struct ValueResult {
    game: GameView,
    method: String,
    symmetrized: bool,
    #[serde(flatten)]
    outcome: ValueOutcome,
}

pub fn run_value(a: &ValueCmdArgs) -> CliResult<String> {
    let mut game: GameSpec = match (&a.game, &a.builtin) {
        (Some(p), None) => read_json(p)?,
        (None, Some(name)) => GameSpec::builtin(name).map_err(|e| usage(e.to_string()))?,
        _ => return Err(usage("give exactly one of --game and --builtin")),
    };
    if a.symmetrize {
        game = symmetrize(&game)?;
    }
    let registry = value_methods();
    let (name, param) = split_selector(&a.method);
    let method = registry.get(name).map_err(|e| usage(e.to_string()))?;
    let strategy: Option<StrategyInput> = a.strategy.as_deref().map(read_json).transpose()?;
    let args = ValueArgs {
        param: param.map(str::to_string),
        strategy,
        dim: a.dim,
        restarts: a.restarts,
        iterations: a.iterations,
        trials: a.trials,
        seed: a.common.seed,
    };
    if method.uses_randomness(&args) {
        need_seed(a.common.seed, &format!("method {}", a.method))?;
    }
    if name == "strategy-eval" && args.strategy.is_none() {
        return Err(usage("strategy-eval needs --strategy"));
    }
    let outcome = method.evaluate(&game, &args)?;
    let result =
        ValueResult { game: GameView::new(&game, None), method: a.method.clone(), symmetrized: a.symmetrize, outcome };
    render("value", a.common.format, a, &result)
}
