use nalgebra::{DMatrix, DVector};

use super::comparator::{transition, ComparatorKind, ComparatorSequence};
use crate::bregman::BregmanGeometry;
use crate::design::{StabilityCertificate, StepKind, StepSchedule};
use crate::error::{Error, Result};
use crate::model::StackedVector;
use crate::simulation::Simulation;
use crate::solver::EstimateTrace;

/// Suprema over the points actually visited: every iterate and the
/// comparator at each time instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalConstants {
    /// `max |grad f_k(z)|`.
    pub gf: f64,
    /// `max |grad psi(z)| + max |grad psi(Phi_k(z))|`.
    pub m: f64,
    /// `max_k max_{a,b} D(a, b)` over points of the same instant.
    pub dmax: f64,
}

pub fn empirical_constants(
    trace: &EstimateTrace,
    comp: Option<&ComparatorSequence>,
    geom: &BregmanGeometry,
    sim: &Simulation,
    gain: &DMatrix<f64>,
) -> Result<EmpiricalConstants> {
    let mut gf: f64 = 0.0;
    let mut m1: f64 = 0.0;
    let mut m2: f64 = 0.0;
    let mut dmax: f64 = 0.0;
    for rec in &trace.records {
        let k = rec.step.k;
        let ctx = sim.context(k);
        let next = sim.context(k + 1);
        let mut pts: Vec<&StackedVector> = rec.step.iterates.iter().collect();
        if let Some(c) = comp {
            pts.push(c.at(k));
        }
        for z in &pts {
            gf = gf.max(ctx.problem.gradient(z.data()).norm());
            m1 = m1.max(geom.grad_psi(z)?.data().norm());
            let moved = transition(&sim.system, gain, z, ctx, next)?;
            m2 = m2.max(geom.grad_psi(&moved)?.data().norm());
        }
        for a in &pts {
            for b in &pts {
                dmax = dmax.max(geom.distance(a, b)?);
            }
        }
    }
    Ok(EmpiricalConstants { gf, m: m1 + m2, dmax })
}

/// Three-term bound for arbitrary comparators with non-increasing step sums.
pub fn bound_theorem2(
    schedule: &StepSchedule,
    sigma: f64,
    consts: &EmpiricalConstants,
    variation: f64,
    t: usize,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::Range("horizon T must be positive".into()));
    }
    let mut prev = f64::INFINITY;
    let mut middle = 0.0;
    for k in 1..=t {
        let s = schedule.step_sum(k);
        if !(s > 0.0) {
            return Err(Error::NotApplicable(format!("no steps taken at k = {k}")));
        }
        if s > prev * (1.0 + 1e-12) {
            return Err(Error::NotApplicable(format!(
                "step sums increase at k = {k}"
            )));
        }
        prev = s;
        middle += schedule.step_sq_sum(k) / s;
    }
    let st = schedule.step_sum(t);
    Ok(consts.dmax / st + consts.gf.powi(2) / (2.0 * sigma) * middle + consts.m * variation / st)
}

/// `(sqrt(T) / it(T)) (L_f / sigma) (D_max + M C_T)`, valid for the
/// inverse-square-root schedule with a non-increasing budget.
pub fn bound_theorem3(
    cert: &StabilityCertificate,
    schedule: &StepSchedule,
    consts: &EmpiricalConstants,
    variation: f64,
    t: usize,
) -> Result<f64> {
    if schedule.kind() != StepKind::InverseSqrt {
        return Err(Error::NotApplicable(
            "requires the inverse-square-root schedule".into(),
        ));
    }
    if !schedule.budget().is_non_increasing() {
        return Err(Error::NotApplicable(
            "requires a non-increasing iteration budget".into(),
        ));
    }
    let it = schedule.iterations(t);
    if it == 0 || t == 0 {
        return Err(Error::NotApplicable("no iterations at T".into()));
    }
    Ok((t as f64).sqrt() / it as f64 * cert.lf / cert.sigma * (consts.dmax + consts.m * variation))
}

/// Constant-regret bound for an exponentially stable comparator.
pub fn bound_theorem4(
    cert: &StabilityCertificate,
    comp: &ComparatorSequence,
    z0: &DVector<f64>,
    zbar0: &DVector<f64>,
) -> Result<f64> {
    let ComparatorKind::Ges {
        alpha: ac,
        beta: bc,
        initial,
    } = &comp.kind
    else {
        return Err(Error::NotApplicable(
            "comparator carries no exponential-stability constants".into(),
        ));
    };
    if !cert.valid {
        return Err(Error::NotApplicable("certificate is not valid".into()));
    }
    if !(cert.beta < 1.0) || !(*bc < 1.0) {
        return Err(Error::NotApplicable("contraction rate is not below one".into()));
    }
    if z0.len() != zbar0.len() || z0.len() != initial.len() {
        return Err(Error::dim("initial points", z0.len(), zbar0.len()));
    }
    let own = cert.alpha.powi(2) * cert.beta.powi(2) / (1.0 - cert.beta.powi(2))
        * (z0 - zbar0).norm_squared();
    let other = ac.powi(2) * bc.powi(2) / (1.0 - bc.powi(2)) * (z0 - initial).norm_squared();
    Ok(0.5 * cert.lf * (own + other))
}
