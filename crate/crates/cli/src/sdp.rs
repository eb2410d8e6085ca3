use serde::Serialize;
use twoprover::consistency::{
    certify_global_consistency, cross_consistency, projectivity_defect, self_consistency, ConsistencyReport,
};
use twoprover::quantum::{restricted_state, BipartiteState, Operator, SubMeasurement};
use twoprover::registry::baselines;
use twoprover::sdp::{
    complete_to_measurement, exact_worked_instance, improve, perturbed_instance, random_sdp_instance,
    self_improvement_loop, solve, BaselineProvider, FixedBaseline, ImproveInstance, LoopOutcome, SdpInstance,
    SdpResult, SdpTraceRow, SelfImprovementConfig,
};

use crate::args::{ImproveArgs, ImprovePreset, MetricsArgs, MetricsPreset};
use crate::report::{render, write_csv};
use crate::{need_seed, read_json, usage, CliResult};

/// Defect threshold reported for the exact worked instance.
const EXACT_TOL: f64 = 1e-9;
/// Multiple of `sqrt(eps + delta)` the sweep compares its consistency error against.
const SWEEP_CONSTANT: f64 = 10.0;

#[derive(Serialize)]
struct SdpSummary {
    primal_value: f64,
    dual_value: f64,
    gap: f64,
    slackness_residual: f64,
    primal_infeasibility: f64,
    dual_infeasibility: f64,
    support_dimension: usize,
    outer_iterations: usize,
}

impl From<&SdpResult> for SdpSummary {
    fn from(r: &SdpResult) -> Self {
        SdpSummary {
            primal_value: r.primal_value,
            dual_value: r.dual_value,
            gap: r.gap,
            slackness_residual: r.slackness_residual,
            primal_infeasibility: r.primal_infeasibility,
            dual_infeasibility: r.dual_infeasibility,
            support_dimension: r.support_dimension,
            outer_iterations: r.trace.len(),
        }
    }
}

#[derive(Serialize)]
struct StepReport {
    baseline: String,
    before: ConsistencyReport,
    after: ConsistencyReport,
    epsilon: f64,
    delta: Option<f64>,
    eta: f64,
    completeness: f64,
    completeness_lower_bound: f64,
    completeness_chain_holds: bool,
    defects_within_tolerance: bool,
    tolerance: f64,
    sdp: SdpSummary,
    improved: SubMeasurement,
}

#[derive(Serialize)]
struct SweepRow {
    eta_perturbation: f64,
    epsilon: f64,
    delta: Option<f64>,
    baseline_consistency: f64,
    consistency: f64,
    bound: Option<f64>,
    within_bound: bool,
    gap: f64,
    slackness_residual: f64,
}

#[derive(Serialize)]
struct SweepReport {
    rows: Vec<SweepRow>,
    monotone_decreasing: bool,
    all_within_bound: bool,
    max_gap: f64,
}

#[derive(Serialize)]
struct ContractRow {
    seed: u64,
    dim: usize,
    constraints: usize,
    #[serde(flatten)]
    sdp: SdpSummary,
}

#[derive(Serialize)]
struct ContractReport {
    rows: Vec<ContractRow>,
    hand_checked: SdpSummary,
    max_gap: f64,
    max_primal_infeasibility: f64,
    max_dual_infeasibility: f64,
    max_slackness_residual: f64,
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
enum ImproveResult {
    Step(StepReport),
    Loop(LoopOutcome),
    Sweep(SweepReport),
    Contract(ContractReport),
}

fn baseline_for(name: &str, inst: &ImproveInstance) -> CliResult<Box<dyn BaselineProvider>> {
    if name == "fixed" {
        let q = inst.baseline.clone().ok_or_else(|| usage("baseline 'fixed' needs a baseline in the instance"))?;
        return Ok(Box::new(FixedBaseline(q)));
    }
    baselines().take(name).map_err(|e| usage(e.to_string()))
}

fn single_step(
    inst: &ImproveInstance,
    baseline: &dyn BaselineProvider,
    config: &SelfImprovementConfig,
) -> CliResult<(StepReport, SdpResult)> {
    let (a, s, psi) = (&inst.family, &inst.structured, &inst.state);
    let q = complete_to_measurement(&baseline.provide(psi, a, s)?)?;
    let before = ConsistencyReport::measure(&q, s, a, psi)?;
    let out = improve(a, s, psi, &q, cross_consistency(&q, s, a, psi)?.max(0.0), &config.sdp)?;
    let r = out.report;
    let within = r.consistency.abs() <= EXACT_TOL
        && r.projectivity.abs() <= EXACT_TOL
        && r.completeness_error.abs() <= EXACT_TOL;
    let report = StepReport {
        baseline: baseline.name().to_string(),
        before,
        after: r,
        epsilon: out.epsilon,
        delta: out.delta,
        eta: out.eta,
        completeness: out.completeness,
        completeness_lower_bound: out.completeness_lower_bound,
        completeness_chain_holds: out.completeness_chain_holds,
        defects_within_tolerance: within,
        tolerance: EXACT_TOL,
        sdp: SdpSummary::from(&out.sdp),
        improved: out.s,
    };
    Ok((report, out.sdp))
}

fn parse_etas(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("bad eta '{x}'")))).collect()
}

pub fn run_improve(a: &ImproveArgs) -> CliResult<String> {
    let config: SelfImprovementConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SelfImprovementConfig::default(),
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let mut trace: Option<Vec<SdpTraceRow>> = None;
    let result = match (a.preset, &a.instance) {
        (Some(ImprovePreset::Sweep), None) => {
            let seed = need_seed(a.common.seed, "the sweep preset")?;
            let mut rows = Vec::new();
            for eta in parse_etas(&a.etas)? {
                let inst = perturbed_instance(a.dim, a.outcomes, a.questions, eta, seed)?;
                let baseline = baseline_for(&a.baseline, &inst)?;
                let (step, _) = single_step(&inst, baseline.as_ref(), &config)?;
                let bound = step.delta.map(|d| SWEEP_CONSTANT * (step.epsilon + d).sqrt());
                rows.push(SweepRow {
                    eta_perturbation: eta,
                    epsilon: step.epsilon,
                    delta: step.delta,
                    baseline_consistency: step.before.consistency,
                    consistency: step.after.consistency,
                    bound,
                    within_bound: bound.is_some_and(|b| step.after.consistency <= b),
                    gap: step.sdp.gap,
                    slackness_residual: step.sdp.slackness_residual,
                });
            }
            ImproveResult::Sweep(SweepReport {
                monotone_decreasing: rows.windows(2).all(|w| w[1].consistency < w[0].consistency),
                all_within_bound: rows.iter().all(|r| r.within_bound),
                max_gap: rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max),
                rows,
            })
        }
        (Some(ImprovePreset::RandomSdp), None) => {
            let seed = need_seed(a.common.seed, "the random-sdp preset")?;
            let rows: Vec<ContractRow> = (0..a.count)
                .map(|i| {
                    let s = seed.wrapping_add(i);
                    let inst = random_sdp_instance(s);
                    let r = solve(&inst)?;
                    Ok(ContractRow {
                        seed: s,
                        dim: inst.dim(),
                        constraints: inst.constraints().len(),
                        sdp: SdpSummary::from(&r),
                    })
                })
                .collect::<CliResult<_>>()?;
            let hand = SdpInstance::new(
                BipartiteState::maximally_entangled(2),
                vec![Operator::diagonal(&[1.0, 0.0]), Operator::diagonal(&[0.0, 1.0])],
            )?;
            let max = |f: &dyn Fn(&ContractRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
            ImproveResult::Contract(ContractReport {
                hand_checked: SdpSummary::from(&solve(&hand)?),
                max_gap: max(&|r| r.sdp.gap.abs()),
                max_primal_infeasibility: max(&|r| r.sdp.primal_infeasibility),
                max_dual_infeasibility: max(&|r| r.sdp.dual_infeasibility),
                max_slackness_residual: max(&|r| r.sdp.slackness_residual),
                rows,
            })
        }
        (preset, path) => {
            let inst = match (preset, path) {
                (Some(ImprovePreset::Exact), None) => exact_worked_instance(
                    a.dim,
                    a.outcomes,
                    a.questions,
                    need_seed(a.common.seed, "the exact preset")?,
                )?,
                (None, Some(p)) => read_json(p)?,
                _ => return Err(usage("give exactly one of --instance and --preset")),
            };
            let baseline = baseline_for(&a.baseline, &inst)?;
            if a.outer_loop {
                ImproveResult::Loop(self_improvement_loop(
                    &inst.family,
                    &inst.structured,
                    &inst.state,
                    &config,
                    baseline.as_ref(),
                )?)
            } else {
                let (step, sdp) = single_step(&inst, baseline.as_ref(), &config)?;
                trace = Some(sdp.trace);
                ImproveResult::Step(step)
            }
        }
    };
    if let Some(path) = &a.trace_csv {
        write_csv(path, trace.as_deref().unwrap_or(&[]))?;
    }
    render("improve", a.common.format, a, &result)
}

#[derive(Serialize)]
struct RestrictionCheck {
    /// `||Phi~||^2` for the restriction by `Id - T`, `T = sum_g T^g`.
    phi_norm_squared: f64,
    /// `1 - <T, Id>_Psi`.
    one_minus_mass: f64,
    difference: f64,
    /// `||T^2 - T||` scale: the identity is exact for projective `T`.
    t_projectivity: f64,
}

#[derive(Serialize)]
struct MetricsResult {
    family_self_consistency: f64,
    family_projectivity_defect: f64,
    measurement: ConsistencyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    global_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    global_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    restriction: Option<RestrictionCheck>,
}

pub fn run_metrics(a: &MetricsArgs) -> CliResult<String> {
    let inst: ImproveInstance = match (a.preset, &a.instance) {
        (Some(MetricsPreset::Exact), None) => {
            exact_worked_instance(a.dim, a.outcomes, a.questions, need_seed(a.common.seed, "the exact preset")?)?
        }
        (Some(MetricsPreset::Perturbed), None) => perturbed_instance(
            a.dim,
            a.outcomes,
            a.questions,
            a.eta,
            need_seed(a.common.seed, "the perturbed preset")?,
        )?,
        (None, Some(p)) => read_json(p)?,
        _ => return Err(usage("give exactly one of --instance and --preset")),
    };
    let (fam, s, psi) = (&inst.family, &inst.structured, &inst.state);
    let t: SubMeasurement = match (&a.measurement, &inst.baseline) {
        (Some(p), _) => read_json(p)?,
        (None, Some(b)) => b.clone(),
        (None, None) => {
            let reg = baselines();
            complete_to_measurement(&reg.get("pretty-good")?.provide(psi, fam, s)?)?
        }
    };
    let cert = match certify_global_consistency(fam, s, psi) {
        Ok(c) => Some(c),
        Err(twoprover::Error::SupportDeficient(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let total = t.total();
    let restriction = match restricted_state(psi, total) {
        Ok((_, n2)) => {
            let mass = psi.local(total).re;
            let tt = total.matrix() * total.matrix() - total.matrix();
            Some(RestrictionCheck {
                phi_norm_squared: n2,
                one_minus_mass: 1.0 - mass,
                difference: (n2 - (1.0 - mass)).abs(),
                t_projectivity: tt.norm(),
            })
        }
        Err(twoprover::Error::ZeroNormResidual(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let result = MetricsResult {
        family_self_consistency: self_consistency(fam, psi)?,
        family_projectivity_defect: projectivity_defect(fam, psi)?,
        measurement: ConsistencyReport::measure(&t, s, fam, psi)?,
        global_delta: cert.as_ref().map(|c| c.delta),
        global_gap: cert.as_ref().map(|c| c.gap),
        restriction,
    };
    render("metrics", a.common.format, a, &result)
}
