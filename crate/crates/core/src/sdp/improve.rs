//! Self-improvement: the sandwich construction `S^g = E_x A_x^{g(x)} T^g A_x^{g(x)}`
//! from an optimal primal point, the combination
//! `R^g = T T^g T + (Id - T) Q^g (Id - T)`, completion to a measurement and
//! the outer loop that chains them.

use serde::{Deserialize, Serialize};

use super::{solve_with, SdpInstance, SdpOptions, SdpResult};
use crate::consistency::{
    aggregate, certify_global_consistency, cross_consistency, ConsistencyReport, StructuredFamily,
};
use crate::error::{Error, Result};
use crate::quantum::{
    identity, maximally_entangled, restricted_state, spectral_map, BipartiteState, MeasurementFamily, Operator,
    SubMeasurement,
};

/// Baseline `t(eps, delta)`: a constant or a table of `(eps, delta, t)` rows.
/// A table row applies when both measured parameters are at most its own;
/// the first applicable row wins and `t0` is the fallback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineBound {
    Constant(f64),
    Table(Vec<[f64; 3]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfImprovementConfig {
    pub epsilon0: f64,
    pub delta0: f64,
    pub t0: f64,
    pub baseline_bound: BaselineBound,
    pub max_outer: usize,
    /// Return a perfect, complete baseline unchanged instead of running the
    /// construction on it.
    pub early_exit: bool,
    /// Relative improvement below which the loop counts as settled.
    pub settle_tol: f64,
    pub sdp: SdpOptions,
}

impl Default for SelfImprovementConfig {
    fn default() -> Self {
        SelfImprovementConfig {
            epsilon0: 0.1,
            delta0: 0.1,
            t0: 0.25,
            baseline_bound: BaselineBound::Constant(0.25),
            max_outer: 8,
            early_exit: true,
            settle_tol: 1e-9,
            sdp: SdpOptions::default(),
        }
    }
}

impl SelfImprovementConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon0", self.epsilon0), ("delta0", self.delta0), ("t0", self.t0)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must lie in (0, 1]")));
            }
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParams("max_outer must be positive".into()));
        }
        Ok(())
    }

    pub fn baseline_t(&self, epsilon: f64, delta: f64) -> f64 {
        match &self.baseline_bound {
            BaselineBound::Constant(t) => *t,
            BaselineBound::Table(rows) => {
                rows.iter().find(|r| epsilon <= r[0] && delta <= r[1]).map(|r| r[2]).unwrap_or(self.t0)
            }
        }
    }
}

/// Supplies a measurement over `G`, meant to be consistent with `A` on the
/// given state.
pub trait BaselineProvider: Send + Sync {
    fn name(&self) -> &str;
    fn provide(&self, psi: &BipartiteState, a: &MeasurementFamily, s: &StructuredFamily) -> Result<SubMeasurement>;
}

/// Returns the same measurement on every state.
pub struct FixedBaseline(pub SubMeasurement);

impl BaselineProvider for FixedBaseline {
    fn name(&self) -> &str {
        "fixed"
    }
    fn provide(&self, _: &BipartiteState, _: &MeasurementFamily, _: &StructuredFamily) -> Result<SubMeasurement> {
        Ok(self.0.clone())
    }
}

/// `Q^g = K^{-1/2} A^g K^{-1/2}` with `K = sum_g A^g`, completed on the kernel
/// of `K`.
pub struct PrettyGoodBaseline;

impl BaselineProvider for PrettyGoodBaseline {
    fn name(&self) -> &str {
        "pretty-good"
    }
    fn provide(&self, _: &BipartiteState, a: &MeasurementFamily, s: &StructuredFamily) -> Result<SubMeasurement> {
        let ags = s.tables().iter().map(|g| aggregate(a, g)).collect::<Result<Vec<_>>>()?;
        let k = ags.iter().fold(Operator::zero(a.dim()), |acc, x| acc.add(x));
        let kh =
            Operator::from_hermitian_part(&spectral_map(k.matrix(), |v| if v > 1e-12 { 1.0 / v.sqrt() } else { 0.0 }));
        let ops = ags.iter().map(|x| x.sandwich(&kh)).collect();
        complete_to_measurement(&SubMeasurement::from_parts_unchecked(s.names().to_vec(), ops))
    }
}

/// `Q^g = Id / |G|`.
pub struct UniformBaseline;

impl BaselineProvider for UniformBaseline {
    fn name(&self) -> &str {
        "uniform"
    }
    fn provide(&self, _: &BipartiteState, a: &MeasurementFamily, s: &StructuredFamily) -> Result<SubMeasurement> {
        let w = 1.0 / s.len() as f64;
        SubMeasurement::new(s.names().to_vec(), vec![Operator::scaled_identity(a.dim(), w); s.len()])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImproveOutcome {
    pub s: SubMeasurement,
    pub report: ConsistencyReport,
    /// Self-consistency of `A` on the state.
    pub epsilon: f64,
    /// Minimal `<Z, Id>_Psi` over `Z >= A^g - (A^g)^2`; absent when the state
    /// lacks full support.
    pub delta: Option<f64>,
    /// Optimal dual `Z >= A^g` of the trace-form program.
    pub dual: Operator,
    pub sdp: SdpResult,
    pub baseline_completeness: f64,
    pub eta: f64,
    pub completeness: f64,
    pub completeness_lower_bound: f64,
    pub completeness_chain_holds: bool,
}

/// Builds `S^g` from the optimum of `sup sum_g Tr(T^g A^g)` over
/// `T^g >= 0, sum_g T^g <= Id`, and measures it against `A` on `psi`.
///
/// The trace-form program is the maximally entangled instance with
/// constraints `(A^g)^T`, so its dual is `Z^T`.
pub fn improve(
    a: &MeasurementFamily,
    s: &StructuredFamily,
    psi: &BipartiteState,
    q: &SubMeasurement,
    eta: f64,
    opts: &SdpOptions,
) -> Result<ImproveOutcome> {
    let measured = cross_consistency(q, s, a, psi)?;
    if measured > eta + 1e-12 {
        return Err(Error::ConsistencyPrecondition { required: eta, measured });
    }
    let dim = a.dim();
    let ags = s.tables().iter().map(|g| aggregate(a, g)).collect::<Result<Vec<_>>>()?;
    let transposed: Vec<Operator> = ags.iter().map(|ag| clip_unit(&ag.transpose())).collect();
    let sdp = solve_with(&SdpInstance::new(maximally_entangled(dim), transposed)?, opts)?;
    let dual = sdp.dual.transpose();

    let mut ops = Vec::with_capacity(s.len());
    for (g, tg) in sdp.operators().iter().enumerate() {
        let table = s.table(g);
        let sg = (0..a.questions())
            .fold(Operator::zero(dim), |acc, x| acc.add(&tg.sandwich(a.op(x, table[x])).scale(a.weight(x))));
        ops.push(sg);
    }
    let out = SubMeasurement::new(s.names().to_vec(), ops)?;
    let report = ConsistencyReport::measure(&out, s, a, psi)?;
    let epsilon = report.self_consistency;
    let delta = match certify_global_consistency(a, s, psi) {
        Ok(cert) => Some(cert.delta),
        Err(Error::SupportDeficient(_)) => None,
        Err(e) => return Err(e),
    };
    let baseline_completeness = psi.local(q.total()).re;
    let completeness = psi.local(out.total()).re;
    let slack = match delta {
        Some(d) if epsilon.max(0.0) + d.max(0.0) > 1e-12 => 10.0 * (epsilon.max(0.0).sqrt() + d.max(0.0).sqrt()),
        Some(_) => 1e-8,
        None => f64::INFINITY,
    };
    let completeness_lower_bound = baseline_completeness - eta - slack;
    Ok(ImproveOutcome {
        s: out,
        report,
        epsilon,
        delta,
        dual,
        sdp,
        baseline_completeness,
        eta,
        completeness,
        completeness_lower_bound,
        completeness_chain_holds: completeness >= completeness_lower_bound,
    })
}

/// Clamps the spectrum into `[0, 1]`; removes round-off from operators that
/// satisfy `0 <= A <= Id` exactly.
fn clip_unit(op: &Operator) -> Operator {
    Operator::from_hermitian_part(&spectral_map(op.matrix(), |v| v.clamp(0.0, 1.0)))
}

/// `R^g = T T^g T + (Id - T) Q^g (Id - T)` with `T = sum_g T^g`.
pub fn combine_r(t: &SubMeasurement, q: &SubMeasurement) -> Result<SubMeasurement> {
    if t.len() != q.len() || t.outcomes() != q.outcomes() {
        return Err(Error::ShapeMismatch("T and Q have different outcome sets".into()));
    }
    if t.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), got: q.dim() });
    }
    let total = t.total();
    let comp = Operator::identity(t.dim()).sub(total);
    let ops =
        t.operators().iter().zip(q.operators()).map(|(tg, qg)| tg.sandwich(total).add(&qg.sandwich(&comp))).collect();
    SubMeasurement::new(t.outcomes().to_vec(), ops)
}

/// Adds `Id - sum_g R^g` to the lexicographically smallest outcome label.
pub fn complete_to_measurement(r: &SubMeasurement) -> Result<SubMeasurement> {
    let k = (0..r.len()).min_by(|&i, &j| r.outcomes()[i].cmp(&r.outcomes()[j])).expect("nonempty");
    let dim = r.dim();
    if max_sum_defect(r) <= 1e-14 {
        return Ok(r.clone());
    }
    let others =
        r.operators().iter().enumerate().filter(|&(i, _)| i != k).fold(Operator::zero(dim), |acc, (_, op)| acc.add(op));
    let mut ops = r.operators().to_vec();
    ops[k] = Operator::identity(dim).sub(&others);
    SubMeasurement::new(r.outcomes().to_vec(), ops)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopIteration {
    pub iteration: usize,
    pub baseline_consistency: f64,
    pub improved_consistency: f64,
    /// `theta = 1 - <T, Id>_Psi` for the improved sub-measurement `T`.
    pub theta: f64,
    pub phi_norm_squared: f64,
    /// `(eps', delta')` measured on the restricted state when it has full support.
    pub phi_epsilon: f64,
    pub phi_delta: Option<f64>,
    pub phi_baseline_consistency: f64,
    pub phi_baseline_bound: f64,
    pub combined_consistency: f64,
    pub v_consistency: f64,
    pub best_consistency: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopOutcome {
    pub measurement: SubMeasurement,
    pub initial: ConsistencyReport,
    pub report: ConsistencyReport,
    pub fixed_point: bool,
    pub settled: bool,
    pub iterations: Vec<LoopIteration>,
}

/// Baseline, improve, restrict, baseline on the restricted state, combine,
/// complete, improve again; repeated while the measured consistency of the
/// best measurement found keeps dropping.
pub fn self_improvement_loop(
    a: &MeasurementFamily,
    s: &StructuredFamily,
    psi: &BipartiteState,
    config: &SelfImprovementConfig,
    baseline: &dyn BaselineProvider,
) -> Result<LoopOutcome> {
    config.validate()?;
    let q0 = complete_to_measurement(&baseline.provide(psi, a, s)?)?;
    let initial = ConsistencyReport::measure(&q0, s, a, psi)?;
    if config.early_exit && initial.consistency.abs() <= 1e-12 && initial.completeness_error.abs() <= 1e-12 {
        return Ok(LoopOutcome {
            measurement: q0,
            initial,
            report: initial,
            fixed_point: true,
            settled: true,
            iterations: Vec::new(),
        });
    }

    let mut best = q0.clone();
    let mut best_cons = initial.consistency;
    let mut current = q0;
    let mut iterations = Vec::new();
    let mut settled = false;
    for iteration in 0..config.max_outer {
        let cur_cons = cross_consistency(&current, s, a, psi)?;
        let imp = improve(a, s, psi, &current, cur_cons.max(0.0), &config.sdp)?;
        let t = &imp.s;
        let theta = 1.0 - psi.local(t.total()).re;
        let (phi, phi_norm_squared) = restricted_state(psi, t.total())?;
        let phi_epsilon = crate::consistency::self_consistency(a, &phi)?;
        let phi_delta = match certify_global_consistency(a, s, &phi) {
            Ok(c) => Some(c.delta),
            Err(Error::SupportDeficient(_)) => None,
            Err(e) => return Err(e),
        };
        let q_phi = complete_to_measurement(&baseline.provide(&phi, a, s)?)?;
        let phi_baseline_consistency = cross_consistency(&q_phi, s, a, &phi)?;
        let phi_baseline_bound = config.baseline_t(phi_epsilon, phi_delta.unwrap_or(f64::INFINITY));
        let r = complete_to_measurement(&combine_r(t, &q_phi)?)?;
        let combined_consistency = cross_consistency(&r, s, a, psi)?;
        let v = improve(a, s, psi, &r, combined_consistency.max(0.0), &config.sdp)?;
        let v_full = complete_to_measurement(&v.s)?;
        let v_consistency = cross_consistency(&v_full, s, a, psi)?;
        if !(combined_consistency.is_finite() && v_consistency.is_finite()) {
            return Err(Error::Divergence(iteration + 1));
        }

        let previous_best = best_cons;
        let (next, next_cons) =
            if v_consistency <= combined_consistency { (v_full, v_consistency) } else { (r, combined_consistency) };
        if next_cons < best_cons {
            best = next.clone();
            best_cons = next_cons;
        }
        iterations.push(LoopIteration {
            iteration,
            baseline_consistency: cur_cons,
            improved_consistency: imp.report.consistency,
            theta,
            phi_norm_squared,
            phi_epsilon,
            phi_delta,
            phi_baseline_consistency,
            phi_baseline_bound,
            combined_consistency,
            v_consistency,
            best_consistency: best_cons,
        });
        if previous_best - best_cons <= config.settle_tol * previous_best.abs().max(1e-300) {
            settled = true;
            break;
        }
        current = next;
    }
    let report = ConsistencyReport::measure(&best, s, a, psi)?;
    debug_assert!(max_sum_defect(&best) < 1e-8);
    Ok(LoopOutcome { measurement: best, initial, report, fixed_point: false, settled, iterations })
}

fn max_sum_defect(m: &SubMeasurement) -> f64 {
    crate::quantum::max_abs(&(m.total().matrix() - identity(m.dim())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::sub_projectivity;
    use crate::quantum::{max_abs, random_real_projective_measurement, CMat};
    use crate::sdp::{exact_worked_instance, perturbed_instance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_instance(
        dim: usize,
        outcomes: usize,
        nx: usize,
        seed: u64,
    ) -> (MeasurementFamily, StructuredFamily, Vec<Operator>) {
        let inst = exact_worked_instance(dim, outcomes, nx, seed).unwrap();
        (inst.family, inst.structured, inst.baseline.unwrap().operators().to_vec())
    }

    fn perturbed(dim: usize, outcomes: usize, nx: usize, eta: f64, seed: u64) -> MeasurementFamily {
        perturbed_instance(dim, outcomes, nx, eta, seed).unwrap().family
    }

    #[test]
    fn exact_instance_is_reproduced() {
        let (fam, s, ps) = exact_instance(4, 2, 3, 1);
        let me = maximally_entangled(4);
        let q = SubMeasurement::new(s.names().to_vec(), ps.clone()).unwrap();
        let out = improve(&fam, &s, &me, &q, 0.0, &SdpOptions::default()).unwrap();
        assert!(out.report.consistency.abs() <= 1e-9, "{:?}", out.report);
        assert!(out.report.projectivity.abs() <= 1e-9);
        assert!(out.report.completeness_error.abs() <= 1e-9);
        for (sg, p) in out.s.operators().iter().zip(&ps) {
            assert!(max_abs(&(sg.matrix() - p.matrix())) < 1e-6);
        }
        assert!(out.completeness_chain_holds);
        assert!(out.sdp.slackness_residual < 1e-4);
    }

    #[test]
    fn zero_baseline_still_gives_sub_measurement() {
        let (fam, s, _) = exact_instance(3, 3, 2, 2);
        let me = maximally_entangled(3);
        let q = SubMeasurement::zero(s.names().to_vec(), 3);
        let out = improve(&fam, &s, &me, &q, 0.5, &SdpOptions::default()).unwrap();
        assert!(out.completeness >= -0.5);
        assert!(out.s.total().max_eigenvalue() <= 1.0 + 1e-10);
    }

    #[test]
    fn precondition_is_checked() {
        let (fam, s, _) = exact_instance(2, 2, 2, 3);
        let me = maximally_entangled(2);
        let q = SubMeasurement::new(s.names().to_vec(), vec![Operator::identity(2), Operator::zero(2)]).unwrap();
        assert!(matches!(
            improve(&fam, &s, &me, &q, 0.0, &SdpOptions::default()),
            Err(Error::ConsistencyPrecondition { .. })
        ));
    }

    #[test]
    fn perturbation_sweep_is_monotone_and_bounded() {
        let me = maximally_entangled(4);
        let s = StructuredFamily::constants(3, 2).unwrap();
        let mut last = f64::INFINITY;
        for eta in [0.1, 0.05, 0.025] {
            let fam = perturbed(4, 2, 3, eta, 7);
            let q = PrettyGoodBaseline.provide(&me, &fam, &s).unwrap();
            let qc = cross_consistency(&q, &s, &fam, &me).unwrap();
            let out = improve(&fam, &s, &me, &q, qc, &SdpOptions::default()).unwrap();
            let cons = out.report.consistency;
            let bound = 10.0 * (out.epsilon + out.delta.unwrap()).sqrt();
            assert!(cons < last, "eta {eta}: {cons} !< {last}");
            assert!(cons <= bound, "eta {eta}: {cons} > {bound}");
            assert!(out.completeness_chain_holds);
            last = cons;
        }
    }

    #[test]
    fn combine_r_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ps = random_real_projective_measurement(3, 3, &mut rng);
        let labels: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let q = SubMeasurement::new(labels.clone(), ps.iter().map(|p| p.scale(0.7)).collect()).unwrap();
        let zero = SubMeasurement::zero(labels.clone(), 3);
        let r = combine_r(&zero, &q).unwrap();
        for (x, y) in r.operators().iter().zip(q.operators()) {
            assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-14);
        }
        let t = SubMeasurement::new(labels.clone(), ps.clone()).unwrap();
        let r = combine_r(&t, &zero).unwrap();
        for (x, y) in r.operators().iter().zip(&ps) {
            assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-12);
        }
    }

    #[test]
    fn combine_r_of_random_inputs_stays_below_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let h = crate::quantum::random_hermitian(4, &mut rng);
            let shrink = Operator::from_hermitian_part(&spectral_map(&h, |v| 0.5 + 0.4 * v.tanh()));
            let ps = crate::quantum::random_projective_measurement(4, 3, &mut rng);
            let t = SubMeasurement::indexed(ps.iter().map(|p| p.sandwich(&shrink)).collect()).unwrap();
            let qs = crate::quantum::random_projective_measurement(4, 3, &mut rng);
            let q = SubMeasurement::indexed(qs).unwrap();
            let r = combine_r(&t, &q).unwrap();
            assert!(r.total().max_eigenvalue() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn completion_examples() {
        let labels: Vec<String> = vec!["b".into(), "a".into(), "c".into()];
        let zero = SubMeasurement::zero(labels.clone(), 2);
        let full = complete_to_measurement(&zero).unwrap();
        assert!(max_abs(&(full.operator(1).matrix() - identity(2))) < 1e-15);
        assert!(max_abs(full.operator(0).matrix()) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ps = random_real_projective_measurement(3, 2, &mut rng);
        let m = SubMeasurement::indexed(ps.clone()).unwrap();
        let same = complete_to_measurement(&m).unwrap();
        for (x, y) in same.operators().iter().zip(&ps) {
            assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-14);
        }
        let partial = SubMeasurement::indexed(ps.iter().map(|p| p.scale(0.3)).collect()).unwrap();
        let done = complete_to_measurement(&partial).unwrap();
        assert!(done.completeness_error(&BipartiteState::random(3, &mut rng)).abs() < 1e-12);
    }

    #[test]
    fn loop_fixed_point_on_exact_instance() {
        let (fam, s, ps) = exact_instance(4, 2, 3, 8);
        let me = maximally_entangled(4);
        let q = SubMeasurement::new(s.names().to_vec(), ps.clone()).unwrap();
        let out = self_improvement_loop(&fam, &s, &me, &SelfImprovementConfig::default(), &FixedBaseline(q)).unwrap();
        assert!(out.fixed_point);
        assert!(out.report.consistency.abs() <= 1e-12);
        for (x, y) in out.measurement.operators().iter().zip(&ps) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn loop_surfaces_degenerate_restriction() {
        let (fam, s, ps) = exact_instance(4, 2, 3, 9);
        let me = maximally_entangled(4);
        let q = SubMeasurement::new(s.names().to_vec(), ps).unwrap();
        let cfg = SelfImprovementConfig { early_exit: false, ..Default::default() };
        let res = self_improvement_loop(&fam, &s, &me, &cfg, &FixedBaseline(q));
        assert!(matches!(res, Err(Error::ZeroNormResidual(_))), "{res:?}");
    }

    #[test]
    fn loop_is_non_worsening() {
        let me = maximally_entangled(3);
        let s = StructuredFamily::constants(3, 3).unwrap();
        for seed in 0..10 {
            let fam = perturbed(3, 3, 3, 0.15, 100 + seed);
            let out =
                self_improvement_loop(&fam, &s, &me, &SelfImprovementConfig::default(), &UniformBaseline).unwrap();
            assert!(out.report.consistency <= out.initial.consistency + 1e-12, "seed {seed}");
            assert!(out.iterations.len() <= 8);
            assert!(out.report.completeness_error.abs() < 1e-9);
            assert!(sub_projectivity(&out.measurement, &me).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn restricted_state_norm_identity_for_projective_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let u = crate::quantum::random_unitary(4, &mut rng);
            let d: Vec<f64> = (0..4).map(|k| 0.3 + 0.2 * k as f64).collect();
            let dm = CMat::from_fn(4, 4, |r, k| if r == k { crate::quantum::c(d[r]) } else { crate::quantum::c(0.0) });
            let psi = BipartiteState::normalized(&u * dm * u.transpose()).unwrap();
            let t = Operator::projector(&u.columns(0, 2).into_owned());
            let (_, n2) = restricted_state(&psi, &t).unwrap();
            let p = psi.local(&t).re;
            assert!((n2 - (1.0 - p)).abs() <= 1e-8, "{n2} vs {}", 1.0 - p);
        }
    }

    #[test]
    fn config_validation_and_bound_lookup() {
        let mut cfg = SelfImprovementConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.t0 = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = SelfImprovementConfig {
            baseline_bound: BaselineBound::Table(vec![[0.01, 0.01, 0.05], [0.1, 0.1, 0.2]]),
            ..Default::default()
        };
        assert_eq!(cfg.baseline_t(0.005, 0.0), 0.05);
        assert_eq!(cfg.baseline_t(0.05, 0.05), 0.2);
        assert_eq!(cfg.baseline_t(0.5, 0.05), cfg.t0);
        let js = serde_json::to_string(&cfg).unwrap();
        let back: SelfImprovementConfig = serde_json::from_str(&js).unwrap();
        assert_eq!(back.baseline_bound, cfg.baseline_bound);
    }
}
