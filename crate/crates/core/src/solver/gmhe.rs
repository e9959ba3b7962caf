use nalgebra::{DMatrix, DVector};

use super::{apriori_in, propagate, reconstruct_state, select, wrap, Estimator, JSelect, StepRecord};
use crate::bregman::{BregmanGeometry, QpWorkspace};
use crate::design::Budget;
use crate::error::{Error, Result};
use crate::model::{LtiSystem, StackedVector};
use crate::simulation::StepContext;

const DIVERGENCE_NORM: f64 = 1e12;

/// Projected gradient descent on the window loss, started from the
/// (optionally observer-corrected) model prediction of the previous head
/// estimate. Iterates are projected onto the constraint set after every
/// step.
#[derive(Debug, Clone)]
pub struct Gmhe {
    sys: LtiSystem,
    gain: DMatrix<f64>,
    step: f64,
    budget: Budget,
    rule: JSelect,
    euclid: BregmanGeometry,
    zbar: Option<StackedVector>,
    initial: DVector<f64>,
    ws: QpWorkspace,
}

impl Gmhe {
    /// `gain = None` uses the plain prediction `A x_hat`.
    pub fn new(
        sys: LtiSystem,
        gain: Option<DMatrix<f64>>,
        step: f64,
        budget: Budget,
        horizon: usize,
        initial: DVector<f64>,
    ) -> Result<Self> {
        if !(step >= 0.0) || !step.is_finite() {
            return Err(Error::Schedule(format!("gradient step must be nonnegative, got {step}")));
        }
        let gain = gain.unwrap_or_else(|| DMatrix::zeros(sys.n(), sys.p()));
        if gain.nrows() != sys.n() || gain.ncols() != sys.p() {
            return Err(Error::dim("observer gain", sys.n(), gain.nrows()));
        }
        if initial.len() != sys.n() {
            return Err(Error::dim("initial estimate", sys.n(), initial.len()));
        }
        let euclid = BregmanGeometry::euclidean(sys.n(), horizon);
        Ok(Self {
            sys,
            gain,
            step,
            budget,
            rule: JSelect::LastIterate,
            euclid,
            zbar: None,
            initial,
            ws: QpWorkspace::new(0),
        })
    }

    pub fn with_selection(mut self, rule: JSelect) -> Self {
        self.rule = rule;
        self
    }
}

impl Estimator for Gmhe {
    fn name(&self) -> &str {
        "gmhe"
    }

    fn geometry(&self) -> Option<&BregmanGeometry> {
        Some(&self.euclid)
    }

    fn step(&mut self, ctx: &StepContext) -> Result<StepRecord> {
        let k = ctx.k;
        let set = &ctx.polytope;
        let layout = set.layout();
        let zbar = match &self.zbar {
            Some(z) => apriori_in(z, layout),
            None => StackedVector::from_head(layout, &self.initial)?,
        };
        self.ws.max_iters = 50 * set.rows().max(1);
        let mut iterates = vec![self
            .euclid
            .project_with(&mut self.ws, &zbar, set)
            .map_err(wrap(k, 0))?];
        let mut step_sizes = Vec::new();
        for i in 0..self.budget.at(k) {
            let current = iterates.last().expect("start point present");
            let grad = ctx.problem.gradient(current.data());
            let moved = current.data() - grad * self.step;
            let norm = moved.norm();
            if !(norm <= DIVERGENCE_NORM) {
                return Err(Error::Divergence { k, norm });
            }
            let moved = StackedVector::new(layout, moved)?;
            let next = self
                .euclid
                .project_with(&mut self.ws, &moved, set)
                .map_err(wrap(k, i + 1))?;
            step_sizes.push(self.step);
            iterates.push(next);
        }
        let losses: Vec<f64> = iterates.iter().map(|z| ctx.problem.loss(z.data())).collect();
        let (selected, min_loss_index) = select(&losses, self.rule);
        let estimate = reconstruct_state(&self.sys, &iterates[selected], &ctx.window)?;
        self.zbar = Some(propagate(&self.sys, &self.gain, &iterates[selected], &ctx.window)?);
        Ok(StepRecord {
            k,
            estimate,
            apriori: Some(zbar),
            iterates,
            losses,
            step_sizes,
            selected,
            min_loss_index,
        })
    }
}
