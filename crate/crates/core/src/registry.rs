//! Named, runtime-selectable variants: LDT adversaries, game-value methods
//! and self-improvement baselines, each behind a common trait.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    classical_strategy_value, classical_value_exact, classical_value_mc, parallel_repeat, quantum_strategy_value,
    quantum_value_mc, repeat_strategy, seesaw_best_of, ClassicalStrategy, GameSpec, Prob, QuantumStrategy,
};
use crate::poly::MultiPoly;
use crate::protocols::{
    constant_bob_strategy, honest_ldt_strategy, mismatched_strategy, random_function_strategy, LdtParams, LdtStrategy,
};
use crate::sdp::{BaselineProvider, PrettyGoodBaseline, UniformBaseline};

struct Entry<T: ?Sized> {
    description: &'static str,
    item: Box<T>,
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, description: &'static str, item: Box<T>) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(Error::InvalidParams(format!("{} '{name}' registered twice", self.kind)));
        }
        self.entries.insert(name.to_string(), Entry { description, item });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries.get(name).map(|e| e.item.as_ref()).ok_or_else(|| self.unknown(name))
    }

    /// Removes and returns an entry.
    pub fn take(&mut self, name: &str) -> Result<Box<T>> {
        self.entries.remove(name).map(|e| e.item).ok_or_else(|| self.unknown(name))
    }

    fn unknown(&self, name: &str) -> Error {
        Error::UnknownName { kind: self.kind, name: name.to_string(), known: self.names().join(", ") }
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn describe(&self) -> Vec<(&str, &'static str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.description)).collect()
    }
}

/// Splits `"repeat:2"` into `("repeat", Some("2"))`.
pub fn split_selector(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    }
}

pub struct LdtStrategyArgs<'a> {
    pub params: &'a LdtParams,
    /// The polynomial honest answers come from.
    pub g: &'a MultiPoly,
    /// Second polynomial for the mismatched strategy.
    pub h: Option<&'a MultiPoly>,
    pub constant: u32,
    pub seed: u64,
    pub custom: Option<&'a LdtStrategy>,
}

pub trait LdtStrategyFactory: Send + Sync {
    fn build(&self, args: &LdtStrategyArgs) -> Result<LdtStrategy>;
}

impl<F> LdtStrategyFactory for F
where
    F: Fn(&LdtStrategyArgs) -> Result<LdtStrategy> + Send + Sync,
{
    fn build(&self, args: &LdtStrategyArgs) -> Result<LdtStrategy> {
        self(args)
    }
}

pub fn ldt_strategies() -> Registry<dyn LdtStrategyFactory> {
    let mut r: Registry<dyn LdtStrategyFactory> = Registry::new("ldt strategy");
    let entries: [(&str, &'static str, Box<dyn LdtStrategyFactory>); 5] = [
        (
            "honest",
            "restrictions and evaluations of g",
            Box::new(|a: &LdtStrategyArgs| honest_ldt_strategy(a.params, a.g)),
        ),
        (
            "constant-bob",
            "honest planes for g, Bob answers a constant",
            Box::new(|a: &LdtStrategyArgs| constant_bob_strategy(a.params, a.g, a.constant)),
        ),
        (
            "mismatched",
            "planes from g, points from a second polynomial",
            Box::new(|a: &LdtStrategyArgs| {
                let h =
                    a.h.ok_or_else(|| Error::InvalidParams("mismatched strategy needs a second polynomial".into()))?;
                mismatched_strategy(a.params, a.g, h)
            }),
        ),
        (
            "random-function",
            "planes from g, points from a seeded uniformly random table",
            Box::new(|a: &LdtStrategyArgs| random_function_strategy(a.params, a.g, a.seed)),
        ),
        (
            "custom-json",
            "answers described by a strategy file",
            Box::new(|a: &LdtStrategyArgs| {
                let s = a.custom.ok_or_else(|| Error::InvalidParams("custom-json needs a strategy file".into()))?;
                s.validate(a.params)?;
                Ok(s.clone())
            }),
        ),
    ];
    for (name, desc, f) in entries {
        r.register(name, desc, f).expect("names are distinct");
    }
    r
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyInput {
    Classical(ClassicalStrategy),
    Quantum(QuantumStrategy),
}

#[derive(Clone, Debug, Default)]
pub struct ValueArgs {
    /// Argument after the colon in the method selector.
    pub param: Option<String>,
    pub strategy: Option<StrategyInput>,
    pub dim: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub trials: u64,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    /// Exact rational value.
    Exact,
    /// Exact value of a given strategy (floating point for quantum ones).
    Strategy,
    MonteCarlo,
    /// See-saw value: a lower bound on the entangled value only.
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueRow {
    pub label: String,
    pub kind: ValueKind,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Prob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

impl ValueRow {
    fn exact(label: impl Into<String>, p: Prob) -> Self {
        ValueRow { label: label.into(), kind: ValueKind::Exact, value: prob_f64(p), exact: Some(p), stderr: None }
    }
}

pub fn prob_f64(p: Prob) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueOutcome {
    pub rows: Vec<ValueRow>,
    /// Checks that were asserted while computing the rows.
    pub checks: Vec<(String, bool)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<serde_json::Value>,
}

pub trait ValueMethod: Send + Sync {
    fn uses_randomness(&self, args: &ValueArgs) -> bool;
    fn evaluate(&self, game: &GameSpec, args: &ValueArgs) -> Result<ValueOutcome>;
}

fn require_seed(args: &ValueArgs) -> Result<u64> {
    args.seed.ok_or_else(|| Error::InvalidParams("a seed is required".into()))
}

struct ExactClassical;

impl ValueMethod for ExactClassical {
    fn uses_randomness(&self, _: &ValueArgs) -> bool {
        false
    }
    fn evaluate(&self, game: &GameSpec, _: &ValueArgs) -> Result<ValueOutcome> {
        let (v, s) = classical_value_exact(game)?;
        Ok(ValueOutcome {
            rows: vec![ValueRow::exact("classical value", v)],
            checks: Vec::new(),
            strategy: Some(serde_json::to_value(StrategyInput::Classical(s))?),
        })
    }
}

struct StrategyEval;

impl ValueMethod for StrategyEval {
    fn uses_randomness(&self, args: &ValueArgs) -> bool {
        args.trials > 0
    }
    fn evaluate(&self, game: &GameSpec, args: &ValueArgs) -> Result<ValueOutcome> {
        let s = args.strategy.as_ref().ok_or_else(|| Error::InvalidParams("strategy-eval needs a strategy".into()))?;
        let mut rows = Vec::new();
        let mc = match s {
            StrategyInput::Classical(c) => {
                let v = classical_strategy_value(game, c)?;
                rows.push(ValueRow { kind: ValueKind::Strategy, ..ValueRow::exact("strategy value", v) });
                (args.trials > 0).then(|| classical_value_mc(game, c, args.trials, require_seed(args)?)).transpose()?
            }
            StrategyInput::Quantum(q) => {
                let v = quantum_strategy_value(game, q)?;
                rows.push(ValueRow {
                    label: "strategy value".into(),
                    kind: ValueKind::Strategy,
                    value: v,
                    exact: None,
                    stderr: None,
                });
                (args.trials > 0).then(|| quantum_value_mc(game, q, args.trials, require_seed(args)?)).transpose()?
            }
        };
        if let Some(m) = mc {
            rows.push(ValueRow {
                label: format!("monte carlo ({} trials)", m.trials),
                kind: ValueKind::MonteCarlo,
                value: m.mean,
                exact: None,
                stderr: Some(m.stderr),
            });
        }
        Ok(ValueOutcome { rows, checks: Vec::new(), strategy: None })
    }
}

struct Seesaw;

impl ValueMethod for Seesaw {
    fn uses_randomness(&self, _: &ValueArgs) -> bool {
        true
    }
    fn evaluate(&self, game: &GameSpec, args: &ValueArgs) -> Result<ValueOutcome> {
        let seed = require_seed(args)?;
        let seeds: Vec<u64> = (0..args.restarts.max(1) as u64).map(|i| seed.wrapping_add(i)).collect();
        let out = seesaw_best_of(game, args.dim, &seeds, args.iterations)?;
        Ok(ValueOutcome {
            rows: vec![ValueRow {
                label: format!("see-saw lower bound (dim {}, {} restarts)", args.dim, seeds.len()),
                kind: ValueKind::LowerBound,
                value: out.lower_bound,
                exact: None,
                stderr: None,
            }],
            checks: vec![("see-saw stagnated".into(), out.stagnated)],
            strategy: Some(serde_json::to_value(StrategyInput::Quantum(out.strategy))?),
        })
    }
}

/// `omega(G^k)` by brute force next to `omega(G)^k`, and the value of the
/// `k`-fold product of an optimal strategy.
struct Repeat;

impl ValueMethod for Repeat {
    fn uses_randomness(&self, _: &ValueArgs) -> bool {
        false
    }
    fn evaluate(&self, game: &GameSpec, args: &ValueArgs) -> Result<ValueOutcome> {
        let k: usize = args
            .param
            .as_deref()
            .ok_or_else(|| Error::InvalidParams("repeat needs a count, as in repeat:2".into()))?
            .parse()
            .map_err(|_| {
                Error::InvalidParams(format!("bad repetition count '{}'", args.param.as_deref().unwrap_or("")))
            })?;
        let (v, s) = classical_value_exact(game)?;
        let rep = parallel_repeat(game, k)?;
        let (vk, _) = classical_value_exact(&rep)?;
        let power = pow(v, k);
        let product = classical_strategy_value(&rep, &repeat_strategy(game, &s, k))?;
        Ok(ValueOutcome {
            rows: vec![
                ValueRow::exact("classical value", v),
                ValueRow::exact(format!("classical value of {k}-fold repetition"), vk),
                ValueRow::exact(format!("classical value ^ {k}"), power),
                ValueRow {
                    kind: ValueKind::Strategy,
                    ..ValueRow::exact(format!("{k}-fold product of optimal strategy"), product)
                },
            ],
            checks: vec![
                (format!("omega(G^{k}) >= omega(G)^{k}"), vk >= power),
                (format!("value(s^{k}) == value(s)^{k}"), product == power),
            ],
            strategy: None,
        })
    }
}

fn pow(p: Prob, k: usize) -> Prob {
    (0..k).fold(Ratio::from_integer(1), |acc, _| acc * p)
}

pub fn value_methods() -> Registry<dyn ValueMethod> {
    let mut r: Registry<dyn ValueMethod> = Registry::new("value method");
    r.register("exact-classical", "classical value by enumeration", Box::new(ExactClassical)).expect("distinct");
    r.register("strategy-eval", "value of a given strategy, optionally with Monte Carlo", Box::new(StrategyEval))
        .expect("distinct");
    r.register("seesaw", "see-saw lower bound on the entangled value", Box::new(Seesaw)).expect("distinct");
    r.register("repeat", "k-fold parallel repetition by brute force (repeat:k)", Box::new(Repeat)).expect("distinct");
    r
}

/// Stateless baselines; a fixed baseline comes from instance data instead.
pub fn baselines() -> Registry<dyn BaselineProvider> {
    let mut r: Registry<dyn BaselineProvider> = Registry::new("baseline");
    r.register("pretty-good", "K^{-1/2} A^g K^{-1/2}, completed", Box::new(PrettyGoodBaseline)).expect("distinct");
    r.register("uniform", "Id / |G|", Box::new(UniformBaseline)).expect("distinct");
    r
}
