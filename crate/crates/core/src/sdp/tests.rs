use super::*;
use crate::quantum::{max_eigenvalue, min_eigenvalue, random_unitary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_constraint<R: Rng>(dim: usize, rng: &mut R) -> Operator {
    let u = random_unitary(dim, rng);
    let d: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let dm = CMat::from_fn(dim, dim, |r, k| if r == k { c(d[r]) } else { c(0.0) });
    Operator::from_hermitian_part(&(&u * dm * u.adjoint()))
}

fn random_instance(seed: u64) -> SdpInstance {
    random_sdp_instance(seed)
}

/// Projected subgradient on the exactly penalized dual
/// `Tr(Z rho) + 2 sum_i lambda_max(A_i - Z)_+`.
fn subgradient_dual(inst: &SdpInstance, iters: usize) -> f64 {
    let rho = inst.psi().reduced_density();
    let dim = inst.dim();
    let value = |z: &CMat| {
        let pen: f64 =
            inst.constraints().iter().map(|a| max_eigenvalue(&hermitian_part(&(a.matrix() - z))).max(0.0)).sum();
        (z * &rho).trace().re + 2.0 * pen
    };
    let mut z = identity(dim);
    let mut best = value(&z);
    for k in 0..iters {
        let mut g = rho.clone();
        for a in inst.constraints() {
            let (vals, vecs) = eigh(&hermitian_part(&(a.matrix() - &z)));
            if vals[dim - 1] > 0.0 {
                let v = vecs.column(dim - 1).into_owned();
                g -= (&v * v.adjoint()) * c(2.0);
            }
        }
        let step = 0.5 / ((k + 1) as f64).sqrt();
        let gn = g.norm().max(1e-12);
        z = hermitian_part(&(&z - g * c(step / gn)));
        best = best.min(value(&z));
    }
    best
}

#[test]
fn single_identity_constraint() {
    let inst = SdpInstance::new(BipartiteState::maximally_entangled(3), vec![Operator::identity(3)]).unwrap();
    let r = solve(&inst).unwrap();
    assert!((r.primal_value - 1.0).abs() < 1e-8);
    assert!((r.dual_value - 1.0).abs() < 1e-8);
    assert!(max_abs(&(r.dual.matrix() - identity(3))) < 1e-6);
    assert!(max_abs(&(r.operators()[0].matrix() - identity(3))) < 1e-8);
}

#[test]
fn two_complementary_projectors() {
    let inst = SdpInstance::new(
        BipartiteState::maximally_entangled(2),
        vec![Operator::diagonal(&[1.0, 0.0]), Operator::diagonal(&[0.0, 1.0])],
    )
    .unwrap();
    let r = solve(&inst).unwrap();
    assert!((r.primal_value - 1.0).abs() < 1e-8, "{}", r.primal_value);
    assert!((r.dual_value - 1.0).abs() < 1e-8);
    assert!(max_abs(&(r.dual.matrix() - identity(2))) < 1e-6);
    assert!(max_abs(&(r.operators()[0].matrix() - Operator::diagonal(&[1.0, 0.0]).matrix())) < 1e-6);
    assert!(max_abs(&(r.operators()[1].matrix() - Operator::diagonal(&[0.0, 1.0]).matrix())) < 1e-6);
}

#[test]
fn random_instances_meet_contract() {
    for seed in 0..20 {
        let inst = random_instance(1000 + seed);
        let r = solve(&inst).unwrap();
        let tol = 1e-6 * r.dual_value.abs().max(1.0);
        assert!(r.gap.abs() <= tol, "seed {seed}: gap {}", r.gap);
        assert!(r.gap >= -1e-8);
        assert!(r.primal_infeasibility <= 1e-8, "seed {seed}: {}", r.primal_infeasibility);
        assert!(r.dual_infeasibility <= 1e-8);
        assert!(r.slackness_residual <= 1e-4, "seed {seed}: slack {}", r.slackness_residual);
        let sum = r.primal.total().matrix() - identity(inst.dim());
        assert!(max_abs(&sum) <= 1e-8);
    }
}

#[test]
fn weak_duality_on_feasible_points() {
    let inst = random_instance(7);
    let r = solve(&inst).unwrap();
    let n = inst.constraints().len();
    let uniform: Vec<Operator> = (0..n).map(|_| Operator::scaled_identity(inst.dim(), 1.0 / n as f64)).collect();
    assert!(inst.primal_objective(&uniform) <= r.dual_value + 1e-8);
    let top = inst.constraints().iter().map(|a| a.max_eigenvalue()).fold(0.0, f64::max);
    let z = Operator::scaled_identity(inst.dim(), top);
    assert!(r.primal_value <= inst.psi().local(&z).re + 1e-8);
}

#[test]
fn subgradient_cross_check() {
    for seed in [3u64, 11, 19] {
        let inst = random_instance(seed);
        let r = solve(&inst).unwrap();
        let other = subgradient_dual(&inst, 4000);
        assert!(other >= r.dual_value - 1e-6, "seed {seed}: {other} < {}", r.dual_value);
        assert!((other - r.dual_value).abs() < 5e-3, "seed {seed}: {other} vs {}", r.dual_value);
    }
}

#[test]
fn rank_deficient_state_is_solved_on_its_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let m = CMat::from_fn(3, 3, |r, k| if r == k && r < 2 { c(std::f64::consts::FRAC_1_SQRT_2) } else { c(0.0) });
    let psi = BipartiteState::new(m).unwrap();
    let cons: Vec<Operator> = (0..3).map(|_| random_constraint(3, &mut rng)).collect();
    let inst = SdpInstance::new(psi, cons).unwrap();
    let r = solve(&inst).unwrap();
    assert_eq!(r.support_dimension, 2);
    assert!(r.gap.abs() < 1e-6);
    assert!(r.dual_infeasibility <= 1e-8);
    assert!(max_abs(&(r.primal.total().matrix() - identity(3))) < 1e-8);
    for t in r.operators() {
        assert!(min_eigenvalue(t.matrix()) > -1e-8);
    }
}

#[test]
fn rejects_invalid_constraints() {
    let psi = BipartiteState::maximally_entangled(2);
    assert!(SdpInstance::new(psi.clone(), vec![Operator::scaled_identity(2, 1.5)]).is_err());
    assert!(SdpInstance::new(psi.clone(), vec![Operator::diagonal(&[-0.5, 0.5])]).is_err());
    assert!(SdpInstance::new(psi, vec![]).is_err());
}

#[test]
fn instance_and_result_json_round_trip() {
    let inst = random_instance(5);
    let s = serde_json::to_string(&inst).unwrap();
    let back: SdpInstance = serde_json::from_str(&s).unwrap();
    assert_eq!(back.constraints().len(), inst.constraints().len());
    let r = solve(&inst).unwrap();
    let js = serde_json::to_string(&r).unwrap();
    let back: SdpResult = serde_json::from_str(&js).unwrap();
    assert!((back.dual_value - r.dual_value).abs() < 1e-15);
    assert!(r.trace_csv().starts_with("outer,mu,"));
}
