//! Primal/dual semidefinite pair
//!
//! ```text
//!   sup  sum_i <T_i, A_i>_Psi          inf  <Z, Id>_Psi
//!   s.t. T_i >= 0, sum_i T_i <= Id     s.t. Z >= A_i, Z >= 0
//! ```
//!
//! solved by a log-det barrier on the dual. Since every `A_i` is PSD the
//! `Z >= 0` constraint is implied and carries no barrier term.

mod improve;
mod presets;

pub use improve::*;
pub use presets::*;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    c, eigh, hermitian_part, identity, max_abs, spectral_map, BipartiteState, CMat, Operator, SubMeasurement, C64,
    SUPPORT_CUTOFF,
};

pub const MAX_DIM: usize = 64;
pub const MAX_CONSTRAINTS: usize = 256;
const NORM_SLACK: f64 = 1e-9;

/// Validated instance: a permutation-invariant state and PSD constraints
/// `0 <= A_i <= Id`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct SdpInstance {
    psi: BipartiteState,
    constraints: Vec<Operator>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    psi: BipartiteState,
    constraints: Vec<Operator>,
}

impl TryFrom<InstanceJson> for SdpInstance {
    type Error = Error;
    fn try_from(j: InstanceJson) -> Result<Self> {
        SdpInstance::new(j.psi, j.constraints)
    }
}

impl From<SdpInstance> for InstanceJson {
    fn from(i: SdpInstance) -> Self {
        InstanceJson { psi: i.psi, constraints: i.constraints }
    }
}

impl SdpInstance {
    pub fn new(psi: BipartiteState, constraints: Vec<Operator>) -> Result<Self> {
        let dim = psi.dim();
        if dim > MAX_DIM {
            return Err(Error::InvalidParams(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        if constraints.is_empty() || constraints.len() > MAX_CONSTRAINTS {
            return Err(Error::InvalidParams(format!(
                "{} constraints (need 1..={MAX_CONSTRAINTS})",
                constraints.len()
            )));
        }
        for a in &constraints {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.dim() });
            }
            a.check_positive()?;
            let top = a.max_eigenvalue();
            if top > 1.0 + NORM_SLACK {
                return Err(Error::InvalidParams(format!("constraint norm {top} exceeds 1")));
            }
        }
        Ok(SdpInstance { psi, constraints })
    }

    pub fn psi(&self) -> &BipartiteState {
        &self.psi
    }

    pub fn constraints(&self) -> &[Operator] {
        &self.constraints
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    /// `sum_i <T_i, A_i>_Psi` for a candidate primal point.
    pub fn primal_objective(&self, t: &[Operator]) -> f64 {
        t.iter().zip(&self.constraints).map(|(ti, ai)| self.psi.pair(ti, ai).re).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub mu0: f64,
    pub mu_factor: f64,
    /// Stop once `n * dim * mu` falls below `target_gap * max(1, |dual|)`.
    pub target_gap: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { mu0: 1.0, mu_factor: 0.5, target_gap: 1e-9, max_outer: 200, max_newton: 80 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SdpTraceRow {
    pub outer: usize,
    pub mu: f64,
    pub newton_steps: usize,
    pub dual_value: f64,
    pub barrier_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpResult {
    pub primal: SubMeasurement,
    pub dual: Operator,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// `max_i ||T_i (sqrt(dim) M) (Z - A_i)^T||_F`; on the maximally
    /// entangled state this is `||T_i (Z - A_i)^T||_F`.
    pub slackness_residual: f64,
    /// Most negative of `min eig(T_i)` and `1 - max eig(sum T_i)`, floored at 0.
    pub primal_infeasibility: f64,
    /// `max(0, -min_i min eig(Z - A_i))`.
    pub dual_infeasibility: f64,
    pub support_dimension: usize,
    pub trace: Vec<SdpTraceRow>,
}

impl SdpResult {
    pub fn operators(&self) -> &[Operator] {
        self.primal.operators()
    }

    /// Diagnostic trace as CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("outer,mu,newton_steps,dual_value,barrier_gap\n");
        for r in &self.trace {
            out.push_str(&format!(
                "{},{:e},{},{:.15e},{:e}\n",
                r.outer, r.mu, r.newton_steps, r.dual_value, r.barrier_gap
            ));
        }
        out
    }
}

/// Orthonormal basis of the Hermitian matrices under `Tr(A B)`, each element
/// stored as its sparse nonzero entries.
struct HermitianBasis {
    elems: Vec<Vec<(usize, usize, C64)>>,
}

impl HermitianBasis {
    fn new(dim: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elems = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            elems.push(vec![(k, k, c(1.0))]);
        }
        for k in 0..dim {
            for l in k + 1..dim {
                elems.push(vec![(k, l, c(s)), (l, k, c(s))]);
                elems.push(vec![(k, l, C64::new(0.0, -s)), (l, k, C64::new(0.0, s))]);
            }
        }
        HermitianBasis { elems }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    /// Coordinates `Tr(E_k G)` of a Hermitian `G`.
    fn coords(&self, g: &CMat) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.elems.iter().map(|e| e.iter().map(|&(p, q, w)| (w * g[(q, p)]).re).sum()),
        )
    }

    fn matrix(&self, v: &DVector<f64>, dim: usize) -> CMat {
        let mut m = CMat::zeros(dim, dim);
        for (e, &x) in self.elems.iter().zip(v.iter()) {
            for &(p, q, w) in e {
                m[(p, q)] += w * c(x);
            }
        }
        m
    }

    /// Accumulates `scale * Tr(E_k Y E_l Y)` into `h`.
    fn add_hessian(&self, y: &CMat, scale: f64, h: &mut DMatrix<f64>) {
        let dim = y.nrows();
        let mut yey = CMat::zeros(dim, dim);
        for (l, el) in self.elems.iter().enumerate() {
            yey.fill(c(0.0));
            for &(p, q, w) in el {
                for r in 0..dim {
                    let left = y[(r, p)] * w;
                    for s in 0..dim {
                        yey[(r, s)] += left * y[(q, s)];
                    }
                }
            }
            for (k, ek) in self.elems.iter().enumerate().skip(l) {
                let v: f64 = ek.iter().map(|&(p, q, w)| (w * yey[(q, p)]).re).sum();
                h[(k, l)] += scale * v;
                if k != l {
                    h[(l, k)] += scale * v;
                }
            }
        }
    }
}

fn chol_logdet(m: &CMat) -> Option<(f64, CMat)> {
    let ch = Cholesky::new(m.clone())?;
    let l = ch.l();
    let logdet: f64 = (0..m.nrows()).map(|k| 2.0 * l[(k, k)].re.ln()).sum();
    if !logdet.is_finite() {
        return None;
    }
    Some((logdet, ch.inverse()))
}

struct Barrier<'a> {
    rho: &'a CMat,
    constraints: Vec<CMat>,
}

impl Barrier<'_> {
    /// Objective and the inverse slacks, or `None` outside the domain.
    fn eval(&self, z: &CMat, mu: f64) -> Option<(f64, Vec<CMat>)> {
        let mut f = (z * self.rho).trace().re;
        let mut inv = Vec::with_capacity(self.constraints.len());
        for a in &self.constraints {
            let (ld, y) = chol_logdet(&hermitian_part(&(z - a)))?;
            f -= mu * ld;
            inv.push(hermitian_part(&y));
        }
        Some((f, inv))
    }
}

/// Solves with default options.
pub fn solve(instance: &SdpInstance) -> Result<SdpResult> {
    solve_with(instance, &SdpOptions::default())
}

pub fn solve_with(instance: &SdpInstance, opts: &SdpOptions) -> Result<SdpResult> {
    let psi = instance.psi();
    let dim = psi.dim();
    let (vals, vecs) = eigh(&psi.reduced_density());
    let support: Vec<usize> = (0..dim).filter(|&k| vals[k] > SUPPORT_CUTOFF).collect();
    if support.len() == dim {
        return solve_full(instance, opts);
    }
    let v = CMat::from_fn(dim, support.len(), |r, k| vecs[(r, support[k])]);
    let vperp_cols: Vec<usize> = (0..dim).filter(|k| !support.contains(k)).collect();
    let vperp = CMat::from_fn(dim, vperp_cols.len(), |r, k| vecs[(r, vperp_cols[k])]);
    let m_r = v.adjoint() * psi.coeffs() * v.map(|z| z.conj());
    let psi_r = BipartiteState::normalized(m_r)?;
    let reduced: Vec<Operator> = instance
        .constraints()
        .iter()
        .map(|a| Operator::from_hermitian_part(&(v.adjoint() * a.matrix() * &v)))
        .collect();
    let sub = solve_full(&SdpInstance { psi: psi_r, constraints: reduced }, opts)?;

    // lift the dual by a Schur-complement choice of the off-support block
    let r = support.len();
    let basis = {
        let mut b = CMat::zeros(dim, dim);
        b.columns_mut(0, r).copy_from(&v);
        b.columns_mut(r, dim - r).copy_from(&vperp);
        b
    };
    let z_r = sub.dual.matrix().clone();
    let mut cshift: f64 = 0.0;
    for a in instance.constraints() {
        let ab = basis.adjoint() * a.matrix() * &basis;
        let a_rr = ab.view((0, 0), (r, r)).into_owned();
        let a_rp = ab.view((0, r), (r, dim - r)).into_owned();
        let a_pp = ab.view((r, r), (dim - r, dim - r)).into_owned();
        let slack = hermitian_part(&(&z_r - &a_rr));
        let inv = Cholesky::new(slack)
            .ok_or_else(|| Error::IllConditioned("reduced dual slack is singular".into()))?
            .inverse();
        let schur = hermitian_part(&(a_pp + a_rp.adjoint() * inv * &a_rp));
        cshift = cshift.max(crate::quantum::max_eigenvalue(&schur));
    }
    let mut zb = CMat::zeros(dim, dim);
    zb.view_mut((0, 0), (r, r)).copy_from(&z_r);
    let pad = cshift.max(0.0) + 1e-6;
    for k in r..dim {
        zb[(k, k)] = c(pad);
    }
    let z = Operator::from_hermitian_part(&(&basis * zb * basis.adjoint()));

    let comp = identity(dim) - &v * v.adjoint();
    let mut ts: Vec<Operator> =
        sub.operators().iter().map(|t| Operator::from_hermitian_part(&(&v * t.matrix() * v.adjoint()))).collect();
    ts[0] = Operator::from_hermitian_part(&(ts[0].matrix() + comp));
    finish(instance, ts, z, sub.trace, r)
}

fn solve_full(instance: &SdpInstance, opts: &SdpOptions) -> Result<SdpResult> {
    let psi = instance.psi();
    let dim = psi.dim();
    let n = instance.constraints().len();
    let rho = psi.reduced_density();
    let barrier =
        Barrier { rho: &rho, constraints: instance.constraints().iter().map(|a| a.matrix().clone()).collect() };
    let basis = HermitianBasis::new(dim);
    let top = instance.constraints().iter().map(|a| a.max_eigenvalue()).fold(0.0, f64::max);
    let mut z = identity(dim) * c(1.0 + top);
    let mut mu = opts.mu0;
    let mut trace = Vec::new();

    for outer in 0..opts.max_outer {
        let mut steps = 0;
        let inv = loop {
            let (f0, ys) = barrier.eval(&z, mu).ok_or_else(|| Error::SolverFailure("left the dual interior".into()))?;
            let grad_m = ys.iter().fold(rho.clone(), |acc, y| acc - y * c(mu));
            let g = basis.coords(&hermitian_part(&grad_m));
            let mut h = DMatrix::<f64>::zeros(basis.len(), basis.len());
            for y in &ys {
                basis.add_hessian(y, mu, &mut h);
            }
            let delta = newton_direction(h, &g)?;
            let decrement = -g.dot(&delta);
            if decrement <= 1e-14 * (1.0 + f0.abs()) || steps >= opts.max_newton {
                if steps >= opts.max_newton && decrement > 1e-8 {
                    return Err(Error::MaxIterations(opts.max_newton));
                }
                break ys;
            }
            let dz = hermitian_part(&basis.matrix(&delta, dim));
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let cand = &z + &dz * c(t);
                if let Some((f1, _)) = barrier.eval(&cand, mu) {
                    if f1 <= f0 - 0.25 * t * decrement || (f0 - f1).abs() <= 1e-15 * (1.0 + f0.abs()) {
                        z = cand;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            steps += 1;
            if !accepted {
                break ys;
            }
        };
        let dual_value = (&z * &rho).trace().re;
        let barrier_gap = (n * dim) as f64 * mu;
        trace.push(SdpTraceRow { outer, mu, newton_steps: steps, dual_value, barrier_gap });
        if barrier_gap <= opts.target_gap * dual_value.abs().max(1.0) {
            let ts = recover_primal(psi, &inv, mu)?;
            return finish(instance, ts, Operator::from_hermitian_part(&z), trace, dim);
        }
        mu *= opts.mu_factor;
    }
    Err(Error::MaxIterations(opts.max_outer))
}

fn newton_direction(mut h: DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = (0..h.nrows()).map(|k| h[(k, k)].abs()).fold(0.0, f64::max).max(1e-300);
    for reg in [0.0, 1e-14, 1e-12, 1e-10] {
        if reg > 0.0 {
            for k in 0..h.nrows() {
                h[(k, k)] += reg * scale;
            }
        }
        if let Some(ch) = Cholesky::new(h.clone()) {
            return Ok(-ch.solve(g));
        }
    }
    Err(Error::IllConditioned(format!("barrier Hessian not positive definite (scale {scale:e})")))
}

/// `W_i = mu (Z - A_i)^{-1}` are the central-path multipliers with
/// `sum_i W_i = rho`; `T_i = (M^{-1} W_i M^{-dag})^T` maps them back.
fn recover_primal(psi: &BipartiteState, inv: &[CMat], mu: f64) -> Result<Vec<Operator>> {
    let m = psi.coeffs();
    let minv =
        m.clone().try_inverse().ok_or_else(|| Error::IllConditioned("state coefficient matrix is singular".into()))?;
    let raw: Vec<CMat> =
        inv.iter().map(|y| hermitian_part(&(&minv * (y * c(mu)) * minv.adjoint()).transpose())).collect();
    let k = raw.iter().fold(CMat::zeros(m.nrows(), m.nrows()), |acc, t| acc + t);
    let k_inv_half = spectral_map(&hermitian_part(&k), |v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
    Ok(raw.iter().map(|t| Operator::from_hermitian_part(&(&k_inv_half * t * &k_inv_half))).collect())
}

fn finish(
    instance: &SdpInstance,
    ts: Vec<Operator>,
    z: Operator,
    trace: Vec<SdpTraceRow>,
    support: usize,
) -> Result<SdpResult> {
    let psi = instance.psi();
    let dim = psi.dim();
    let primal_value = instance.primal_objective(&ts);
    let dual_value = psi.local(&z).re;
    let scaled_m = psi.coeffs() * c((dim as f64).sqrt());
    let mut slackness: f64 = 0.0;
    let mut dual_inf: f64 = 0.0;
    for (t, a) in ts.iter().zip(instance.constraints()) {
        let x = z.matrix() - a.matrix();
        slackness = slackness.max((t.matrix() * &scaled_m * x.transpose()).norm());
        dual_inf = dual_inf.max(-crate::quantum::min_eigenvalue(&hermitian_part(&x)));
    }
    let mut primal_inf: f64 = 0.0;
    let mut sum = CMat::zeros(dim, dim);
    for t in &ts {
        primal_inf = primal_inf.max(-t.min_eigenvalue());
        sum += t.matrix();
    }
    primal_inf = primal_inf.max(crate::quantum::max_eigenvalue(&hermitian_part(&sum)) - 1.0);
    debug_assert!(max_abs(&(sum - identity(dim))) < 1e-6);
    let primal = SubMeasurement::new_unchecked_labels(ts);
    Ok(SdpResult {
        primal,
        dual: z,
        primal_value,
        dual_value,
        gap: dual_value - primal_value,
        slackness_residual: slackness,
        primal_infeasibility: primal_inf.max(0.0),
        dual_infeasibility: dual_inf.max(0.0),
        support_dimension: support,
        trace,
    })
}

#[cfg(test)]
mod tests;
