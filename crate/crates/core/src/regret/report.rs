use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::bounds::{empirical_constants, EmpiricalConstants};
use super::comparator::{comparator_variation, ComparatorSequence};
use crate::bregman::BregmanGeometry;
use crate::error::{Error, Result};
use crate::simulation::Simulation;
use crate::solver::EstimateTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    /// `R(T)` for `T = 1..`.
    pub regret: Vec<f64>,
    pub average: Vec<f64>,
    /// `C_T` for the same `T`.
    pub variation: Vec<f64>,
    pub constants: EmpiricalConstants,
    pub bound2: Vec<Option<f64>>,
    pub bound3: Vec<Option<f64>>,
    pub bound4: Vec<Option<f64>>,
}

impl RegretReport {
    pub fn len(&self) -> usize {
        self.regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regret.is_empty()
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.regret.last().copied()
    }

    /// Header `T,R,R/T,C_T,bound2,bound3,bound4`; absent bounds are empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,R,R/T,C_T,bound2,bound3,bound4\n");
        let opt = |v: Option<&Option<f64>>| match v {
            Some(Some(x)) => format!("{x:.16e}"),
            _ => String::new(),
        };
        for i in 0..self.regret.len() {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{},{},{}",
                i + 1,
                self.regret[i],
                self.average[i],
                self.variation[i],
                opt(self.bound2.get(i)),
                opt(self.bound3.get(i)),
                opt(self.bound4.get(i)),
            );
        }
        s
    }
}

/// `R(T) = sum_{k<=T} [min_i f_k(z_k^i) - f_k(z_k^c)]`. Bounds are left
/// empty; fill them with the functions in [`super::bounds`].
pub fn regret(
    trace: &EstimateTrace,
    comp: &ComparatorSequence,
    sim: &Simulation,
    geom: &BregmanGeometry,
    gain: &DMatrix<f64>,
) -> Result<RegretReport> {
    if comp.len() < trace.len() + 1 {
        return Err(Error::Range(format!(
            "comparator covers {} instants, {} required",
            comp.len(),
            trace.len() + 1
        )));
    }
    comp.validate(sim)?;
    let mut regret = Vec::with_capacity(trace.len());
    let mut acc = 0.0;
    for rec in &trace.records {
        let k = rec.step.k;
        let own = rec.step.min_loss().ok_or_else(|| {
            Error::NotApplicable(format!("estimator reports no losses at k = {k}"))
        })?;
        let ctx = sim.context(k);
        acc += own - ctx.problem.loss(comp.at(k).data());
        regret.push(acc);
    }
    let average = regret
        .iter()
        .enumerate()
        .map(|(i, r)| r / (i + 1) as f64)
        .collect();
    let mut variation = comparator_variation(comp, sim, gain)?;
    variation.truncate(trace.len());
    let constants = empirical_constants(trace, Some(comp), geom, sim, gain)?;
    let n = trace.len();
    Ok(RegretReport {
        regret,
        average,
        variation,
        constants,
        bound2: vec![None; n],
        bound3: vec![None; n],
        bound4: vec![None; n],
    })
}

/// `sqrt(sum_{k=N}^{T} |e_k|^2 / (T - N + 1))`.
pub fn rmse(trace: &EstimateTrace, horizon: usize, t: usize) -> Result<f64> {
    if t < horizon || t > trace.len() {
        return Err(Error::Range(format!(
            "trace of length {} cannot cover k = {horizon}..={t}",
            trace.len()
        )));
    }
    let mut sum = 0.0;
    for k in horizon..=t {
        let e = if k == 0 {
            trace.initial_error.as_ref()
        } else {
            trace.records[k - 1].error.as_ref()
        };
        let e = e.ok_or_else(|| Error::Range("trace carries no true states".into()))?;
        sum += e.norm_squared();
    }
    Ok((sum / (t - horizon + 1) as f64).sqrt())
}
