//! Seeded instances shared by the CLI presets and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SdpInstance;
use crate::consistency::StructuredFamily;
use crate::error::Result;
use crate::quantum::{
    c, random_orthogonal, random_real_projective_measurement, random_unitary, unitary_exp, BipartiteState, CMat,
    MeasurementFamily, Operator, SubMeasurement, C64,
};

/// Random instance with `dim <= 8`, at most 10 constraints `U diag(u) U^dag`
/// with `u` uniform in `[0, 1)`, and a random symmetric state.
pub fn random_sdp_instance(seed: u64) -> SdpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(1..=8);
    let n = rng.gen_range(1..=10);
    let psi = BipartiteState::random(dim, &mut rng);
    let cons = (0..n)
        .map(|_| {
            let u = random_unitary(dim, &mut rng);
            let d: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            let dm = CMat::from_fn(dim, dim, |r, k| if r == k { c(d[r]) } else { c(0.0) });
            Operator::from_hermitian_part(&(&u * dm * u.adjoint()))
        })
        .collect();
    SdpInstance::new(psi, cons).expect("generated constraints are valid")
}

/// Measurement family, structured family and baseline for the self-improvement step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImproveInstance {
    pub state: BipartiteState,
    pub family: MeasurementFamily,
    pub structured: StructuredFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<SubMeasurement>,
}

/// The same real projective measurement for every question, constant
/// functions as the structured family, the maximally entangled state, and
/// the projectors themselves as baseline.
pub fn exact_worked_instance(dim: usize, outcomes: usize, questions: usize, seed: u64) -> Result<ImproveInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ps = random_real_projective_measurement(dim, outcomes, &mut rng);
    let structured = StructuredFamily::constants(questions, outcomes)?;
    let baseline = SubMeasurement::new(structured.names().to_vec(), ps.clone())?;
    Ok(ImproveInstance {
        state: BipartiteState::maximally_entangled(dim),
        family: MeasurementFamily::new(vec![ps; questions], None)?,
        structured,
        baseline: Some(baseline),
    })
}

/// The exact family with each question's projectors rotated by
/// `exp(eta K_x)`, `K_x` real antisymmetric; no fixed baseline.
pub fn perturbed_instance(
    dim: usize,
    outcomes: usize,
    questions: usize,
    eta: f64,
    seed: u64,
) -> Result<ImproveInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ps = random_real_projective_measurement(dim, outcomes, &mut rng);
    let rows = (0..questions)
        .map(|_| {
            let o = random_orthogonal(dim, &mut rng);
            let k = (&o - o.transpose()) * C64::new(0.0, 1.0);
            let u = unitary_exp(&Operator::from_hermitian_part(&k).into_matrix(), -eta);
            ps.iter().map(|p| Operator::from_hermitian_part(&(&u * p.matrix() * u.adjoint()))).collect()
        })
        .collect();
    Ok(ImproveInstance {
        state: BipartiteState::maximally_entangled(dim),
        family: MeasurementFamily::new(rows, None)?,
        structured: StructuredFamily::constants(questions, outcomes)?,
        baseline: None,
    })
}
