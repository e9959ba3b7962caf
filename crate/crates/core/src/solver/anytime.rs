use nalgebra::{DMatrix, DVector};

use super::{apriori_in, propagate, reconstruct_state, select, wrap, Estimator, JSelect, StepRecord};
use crate::bregman::{BregmanGeometry, QpWorkspace};
use crate::design::{StabilityCertificate, StepSchedule};
use crate::error::{Error, Result};
use crate::model::{LtiSystem, StackedVector};
use crate::simulation::StepContext;

/// Where each mirror step places the proximity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    #[default]
    PreviousIterate,
    /// Every step is anchored at the a priori point.
    Apriori,
}

/// Projection warm start followed by `it(k)` mirror-descent steps.
#[derive(Debug, Clone)]
pub struct AnytimePmhe {
    sys: LtiSystem,
    gain: DMatrix<f64>,
    geometry: BregmanGeometry,
    schedule: StepSchedule,
    centering: Centering,
    rule: JSelect,
    zbar: Option<StackedVector>,
    initial: DVector<f64>,
    ws: QpWorkspace,
}

impl AnytimePmhe {
    pub fn new(
        sys: LtiSystem,
        gain: DMatrix<f64>,
        geometry: BregmanGeometry,
        schedule: StepSchedule,
        initial: DVector<f64>,
    ) -> Result<Self> {
        if gain.nrows() != sys.n() || gain.ncols() != sys.p() {
            return Err(Error::dim("observer gain", sys.n(), gain.nrows()));
        }
        if geometry.n() != sys.n() {
            return Err(Error::dim("geometry state dimension", sys.n(), geometry.n()));
        }
        if initial.len() != sys.n() {
            return Err(Error::dim("initial estimate", sys.n(), initial.len()));
        }
        Ok(Self {
            sys,
            gain,
            geometry,
            schedule,
            centering: Centering::PreviousIterate,
            rule: JSelect::LastIterate,
            zbar: None,
            initial,
            ws: QpWorkspace::new(0),
        })
    }

    pub fn from_certificate(
        sys: LtiSystem,
        cert: &StabilityCertificate,
        schedule: StepSchedule,
        initial: DVector<f64>,
    ) -> Result<Self> {
        if !cert.valid {
            return Err(Error::Config(format!(
                "certificate is not valid (LMI eigenvalue {:e})",
                cert.lmi_margin
            )));
        }
        Self::new(sys, cert.gain.clone(), cert.geometry()?, schedule, initial)
    }

    pub fn with_centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }

    pub fn with_selection(mut self, rule: JSelect) -> Self {
        self.rule = rule;
        self
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }
}

impl Estimator for AnytimePmhe {
    fn name(&self) -> &str {
        match self.centering {
            Centering::PreviousIterate => "anytime",
            Centering::Apriori => "warm_constant",
        }
    }

    fn geometry(&self) -> Option<&BregmanGeometry> {
        Some(&self.geometry)
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
        let mut iterates = Vec::with_capacity(self.schedule.iterations(k) + 1);
        iterates.push(
            self.geometry
                .project_with(&mut self.ws, &zbar, set)
                .map_err(wrap(k, 0))?,
        );
        let mut step_sizes = Vec::new();
        for i in 0..self.schedule.iterations(k) {
            let eta = self.schedule.eta(k, i);
            let current = iterates.last().expect("warm start present");
            let grad = ctx.problem.eval_gradient(current).map_err(wrap(k, i + 1))?;
            let center = match self.centering {
                Centering::PreviousIterate => current,
                Centering::Apriori => &zbar,
            };
            let next = self
                .geometry
                .mirror_subproblem_with(&mut self.ws, &grad, eta, center, set)
                .map_err(wrap(k, i + 1))?;
            step_sizes.push(eta);
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
