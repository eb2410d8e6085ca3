use serde::Serialize;
use twoprover::poly::MultiPoly;
use twoprover::protocols::{ldt_exact, ldt_run, ldt_transcript, LdtExact, LdtParams, LdtSizes, LdtStats, LdtStrategy};
use twoprover::registry::{ldt_strategies, prob_f64, LdtStrategyArgs};
use twoprover::rng::{binomial_stderr, trial_rng};

use crate::args::LdtArgs;
use crate::report::{render, write_csv};
use crate::{need_seed, read_json, usage, CliResult};

/// Streams reserved for drawing the random polynomials, away from trial streams.
const G_STREAM: u64 = u64::MAX;
const H_STREAM: u64 = u64::MAX - 1;

#[derive(Serialize)]
struct Diagnostic {
    epsilon: f64,
    c: f64,
    /// `q / (d m / epsilon)^c`; the soundness analysis wants at least 1.
    ratio: f64,
    hypothesis_met: bool,
}

#[derive(Serialize)]
struct ExactView {
    #[serde(flatten)]
    exact: LdtExact,
    acceptance_decimal: f64,
}

#[derive(Serialize)]
pub(crate) struct Comparison {
    pub z: f64,
    pub within_3_sigma: bool,
}

/// `(sampled - exact) / stderr(exact)`; sampled must equal exact when the
/// exact value is 0 or 1.
pub(crate) fn compare(sampled: f64, exact: f64, trials: u64) -> Comparison {
    let se = binomial_stderr(exact, trials);
    let diff = sampled - exact;
    if se == 0.0 {
        Comparison { z: if diff == 0.0 { 0.0 } else { f64::INFINITY }, within_3_sigma: diff == 0.0 }
    } else {
        Comparison { z: diff / se, within_3_sigma: diff.abs() <= 3.0 * se }
    }
}

#[derive(Serialize)]
struct LdtResult {
    params: LdtParams,
    sizes: LdtSizes,
    diagnostic: Diagnostic,
    g: MultiPoly,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<MultiPoly>,
    strategy: LdtStrategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<LdtStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

pub fn run_ldt(a: &LdtArgs) -> CliResult<String> {
    let params = LdtParams::new(a.d, a.m, a.q)?;
    let registry = ldt_strategies();
    let factory = registry.get(&a.strategy).map_err(|e| usage(e.to_string()))?;
    if a.trials == 0 && !a.exhaustive {
        return Err(usage("give --trials, --exhaustive or both"));
    }
    let randomized = a.trials > 0
        || a.transcript.is_some()
        || (a.poly.is_none() && a.strategy != "custom-json")
        || (a.strategy == "mismatched" && a.poly2.is_none())
        || a.strategy == "random-function";
    let seed = if randomized { Some(need_seed(a.common.seed, "this ldt run")?) } else { a.common.seed };
    let draw =
        |stream| MultiPoly::random(params.field(), params.m(), params.d(), &mut trial_rng(seed.unwrap_or(0), stream));
    let g = match &a.poly {
        Some(p) => read_json(p)?,
        None => draw(G_STREAM),
    };
    let h = match (&a.poly2, a.strategy.as_str()) {
        (Some(p), _) => Some(read_json(p)?),
        (None, "mismatched") => Some(draw(H_STREAM)),
        (None, _) => None,
    };
    let custom: Option<LdtStrategy> = a.strategy_file.as_deref().map(read_json).transpose()?;
    let strategy = factory.build(&LdtStrategyArgs {
        params: &params,
        g: &g,
        h: h.as_ref(),
        constant: a.constant,
        seed: seed.unwrap_or(0),
        custom: custom.as_ref(),
    })?;
    let sampled = (a.trials > 0).then(|| ldt_run(&params, &strategy, a.trials, seed.unwrap_or(0))).transpose()?;
    let exact = a
        .exhaustive
        .then(|| ldt_exact(&params, &strategy))
        .transpose()?
        .map(|e| ExactView { acceptance_decimal: prob_f64(e.acceptance), exact: e });
    let comparison = match (&sampled, &exact) {
        (Some(s), Some(e)) => Some(compare(s.acceptance, e.acceptance_decimal, s.trials)),
        _ => None,
    };
    if let Some(path) = &a.transcript {
        write_csv(path, &ldt_transcript(&params, &strategy, a.transcript_rounds, seed.unwrap_or(0))?)?;
    }
    let ratio = params.soundness_ratio(a.epsilon, a.c);
    let result = LdtResult {
        sizes: params.sizes(),
        params,
        diagnostic: Diagnostic { epsilon: a.epsilon, c: a.c, ratio, hypothesis_met: ratio >= 1.0 },
        g,
        h,
        strategy,
        sampled,
        exact,
        comparison,
    };
    render("ldt", a.common.format, a, &result)
}
