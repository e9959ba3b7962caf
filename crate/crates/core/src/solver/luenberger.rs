use nalgebra::{DMatrix, DVector};

use super::{Estimator, StepRecord};
use crate::error::{Error, Result};
use crate::model::LtiSystem;
use crate::simulation::StepContext;

/// `x_hat+ = A x_hat + B u + L (y - C x_hat)` on the newest measurement.
#[derive(Debug, Clone)]
pub struct LuenbergerObserver {
    sys: LtiSystem,
    gain: DMatrix<f64>,
    estimate: DVector<f64>,
}

impl LuenbergerObserver {
    pub fn new(sys: LtiSystem, gain: DMatrix<f64>, initial: DVector<f64>) -> Result<Self> {
        if gain.nrows() != sys.n() || gain.ncols() != sys.p() {
            return Err(Error::dim("observer gain", sys.n(), gain.nrows()));
        }
        if initial.len() != sys.n() {
            return Err(Error::dim("initial estimate", sys.n(), initial.len()));
        }
        Ok(Self {
            sys,
            gain,
            estimate: initial,
        })
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.estimate
    }

    /// One observer update from `(y, u)` at the current estimate.
    pub fn update(&mut self, y: &DVector<f64>, u: &DVector<f64>) -> &DVector<f64> {
        let x = &self.estimate;
        self.estimate = self.sys.step(x, u) + &self.gain * (y - self.sys.output(x));
        &self.estimate
    }
}

impl Estimator for LuenbergerObserver {
    fn name(&self) -> &str {
        "luenberger"
    }

    fn step(&mut self, ctx: &StepContext) -> Result<StepRecord> {
        let w = &ctx.window;
        if w.is_empty() {
            return Err(Error::Range("observer needs a window of at least one sample".into()));
        }
        let last = w.len() - 1;
        let (y, u) = (w.y(last).clone(), w.u(last).clone());
        let estimate = self.update(&y, &u).clone();
        Ok(StepRecord {
            k: ctx.k,
            estimate,
            apriori: None,
            iterates: Vec::new(),
            losses: Vec::new(),
            step_sizes: Vec::new(),
            selected: 0,
            min_loss_index: 0,
        })
    }
}
