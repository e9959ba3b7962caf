use nalgebra::DVector;

use super::{Estimator, StepRecord};
use crate::error::{Error, Result};
use crate::simulation::Simulation;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: StepRecord,
    pub truth: Option<DVector<f64>>,
    pub error: Option<DVector<f64>>,
    /// `D(z_k, z_hat_k^{j(k)})` against the true stacked state.
    pub lyapunov: Option<f64>,
}

/// Per-time output of one estimator over a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrace {
    pub estimator: String,
    /// `x_0 - x_hat_0` when the truth is known.
    pub initial_error: Option<DVector<f64>>,
    pub records: Vec<TraceRecord>,
}

impl EstimateTrace {
    /// Runs `est` for `k = 1..=sim.steps`.
    pub fn collect(
        est: &mut dyn Estimator,
        sim: &Simulation,
        initial_estimate: &DVector<f64>,
    ) -> Result<Self> {
        let initial_error = sim.true_state(0).map(|x0| x0 - initial_estimate);
        let mut records = Vec::with_capacity(sim.steps);
        for ctx in sim.contexts() {
            let step = est.step(ctx)?;
            let truth = sim.true_state(ctx.k).cloned();
            let error = truth.as_ref().map(|x| x - &step.estimate);
            let lyapunov = match (est.geometry(), step.selected_iterate(), sim.true_stacked(ctx.k)) {
                (Some(g), Some(z), Some(zt)) => Some(g.distance(&zt, z)?),
                _ => None,
            };
            records.push(TraceRecord {
                step,
                truth,
                error,
                lyapunov,
            });
        }
        Ok(Self {
            estimator: est.name().to_string(),
            initial_error,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn estimates(&self) -> Vec<&DVector<f64>> {
        self.records.iter().map(|r| &r.step.estimate).collect()
    }

    /// `|e_k|` for `k = 1..`; requires the truth.
    pub fn error_norms(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| {
                r.error
                    .as_ref()
                    .map(|e| e.norm())
                    .ok_or_else(|| Error::Range("trace carries no true states".into()))
            })
            .collect()
    }

    pub fn min_losses(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.step.min_loss()).collect()
    }
}
