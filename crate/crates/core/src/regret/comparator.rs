use nalgebra::{DMatrix, DVector};

use crate::bregman::BregmanGeometry;
use crate::error::{Error, Result};
use crate::model::{LtiSystem, StackedVector};
use crate::simulation::{Simulation, StepContext};
use crate::solver::{apriori_operator, LuenbergerObserver};

#[derive(Debug, Clone, PartialEq)]
pub enum ComparatorKind {
    TrueStates,
    Custom,
    /// Output of an exponentially stable estimator with
    /// `|z_k - z_k^c| <= alpha beta^k |z_0 - z_0^c|`.
    Ges {
        alpha: f64,
        beta: f64,
        initial: DVector<f64>,
    },
}

/// `z_1^c, z_2^c, ...`, each in the layout of its time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorSequence {
    pub kind: ComparatorKind,
    pub values: Vec<StackedVector>,
}

impl ComparatorSequence {
    /// True stacked states for `k = 1..=steps + 1`.
    pub fn true_states(sim: &Simulation) -> Result<Self> {
        let values = (1..=sim.steps + 1)
            .map(|k| {
                sim.true_stacked(k)
                    .ok_or_else(|| Error::Range("simulation carries no true states".into()))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: ComparatorKind::TrueStates,
            values,
        })
    }

    pub fn custom(values: Vec<StackedVector>) -> Self {
        Self {
            kind: ComparatorKind::Custom,
            values,
        }
    }

    /// Window-head estimates of a Luenberger observer with gain `gain`,
    /// projected onto each constraint set. `(alpha, beta)` are fitted to
    /// the distance from the true stacked states.
    pub fn observer(sim: &Simulation, gain: &DMatrix<f64>, initial: &DVector<f64>) -> Result<Self> {
        let euclid = BregmanGeometry::euclidean(sim.system.n(), sim.horizon);
        let mut obs = LuenbergerObserver::new(sim.system.clone(), gain.clone(), initial.clone())?;
        let mut head_time = 0;
        let mut values = Vec::with_capacity(sim.steps + 1);
        for k in 1..=sim.steps + 1 {
            let ctx = sim.context(k);
            while head_time < ctx.window.head_time() {
                obs.update(&sim.outputs[head_time], &sim.inputs[head_time]);
                head_time += 1;
            }
            let raw = StackedVector::from_head(ctx.polytope.layout(), obs.estimate())?;
            values.push(euclid.project(&raw, &ctx.polytope)?);
        }
        let x0 = sim
            .true_state(0)
            .ok_or_else(|| Error::Range("fitting needs the true states".into()))?;
        let mut errors = vec![(x0 - initial).norm()];
        for (k, v) in values.iter().enumerate() {
            let zt = sim.true_stacked(k + 1).expect("truth present");
            errors.push(zt.distance(v));
        }
        let (alpha, beta) = fit_ges(&errors);
        Ok(Self {
            kind: ComparatorKind::Ges {
                alpha,
                beta,
                initial: initial.clone(),
            },
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `z_k^c`, `k >= 1`.
    pub fn at(&self, k: usize) -> &StackedVector {
        &self.values[k - 1]
    }

    /// Checks `z_k^c in S_k` for every covered `k`.
    pub fn validate(&self, sim: &Simulation) -> Result<()> {
        for (i, z) in self.values.iter().enumerate().take(sim.steps + 1) {
            let k = i + 1;
            let set = &sim.context(k).polytope;
            if z.layout() != set.layout() {
                return Err(Error::dim("comparator entry", set.layout().dim(), z.dim()));
            }
            let violation = set.max_violation(z.data());
            if violation > set.tol().max(1e-8) {
                return Err(Error::Comparator { k, violation });
            }
        }
        Ok(())
    }
}

/// Least-squares rate on `log(e_k / e_0)`, then the smallest `alpha >= 1`
/// making `alpha beta^k e_0` an envelope. Points at the floating-point floor
/// are left out of the rate fit.
pub fn fit_ges(errors: &[f64]) -> (f64, f64) {
    let Some(&e0) = errors.first() else {
        return (1.0, 0.0);
    };
    if e0 <= 0.0 {
        return (1.0, 0.0);
    }
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 1e-12 * e0)
        .map(|(k, e)| (k as f64, (e / e0).ln()))
        .collect();
    let beta = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let mk = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mk) * (p.1 - ml)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mk).powi(2)).sum();
        (sxy / sxx).exp().min(1.0)
    };
    let mut alpha: f64 = 1.0;
    for (k, e) in errors.iter().enumerate() {
        if *e <= 1e-12 * e0 {
            continue;
        }
        let env = e0 * beta.powi(k as i32);
        if env > 0.0 {
            alpha = alpha.max(e / env);
        } else {
            alpha = f64::INFINITY;
        }
    }
    (alpha, beta)
}

/// The map the a priori update applies between `k` and `k + 1`, expressed in
/// the layout of `next`.
pub fn transition(
    sys: &LtiSystem,
    gain: &DMatrix<f64>,
    z: &StackedVector,
    ctx: &StepContext,
    next: &StepContext,
) -> Result<StackedVector> {
    let layout = next.polytope.layout();
    if ctx.window.is_full() {
        Ok(apriori_operator(sys, gain, z, &ctx.window)?.reshaped(layout))
    } else {
        Ok(z.reshaped(layout))
    }
}

/// `C_T = sum_{k<=T} |z_{k+1}^c - Phi_k(z_k^c)|` for `T = 1..=len-1`.
pub fn comparator_variation(
    comp: &ComparatorSequence,
    sim: &Simulation,
    gain: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(comp.len().saturating_sub(1));
    let mut acc = 0.0;
    for k in 1..comp.len() {
        let moved = transition(&sim.system, gain, comp.at(k), sim.context(k), sim.context(k + 1))?;
        acc += moved.distance(comp.at(k + 1));
        out.push(acc);
    }
    Ok(out)
}
