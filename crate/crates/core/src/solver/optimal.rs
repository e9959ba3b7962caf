use nalgebra::{DMatrix, DVector};

use super::{apriori_in, propagate, reconstruct_state, wrap, Estimator, StepRecord};
use crate::bregman::{BregmanGeometry, QpWorkspace};
use crate::design::StabilityCertificate;
use crate::error::{Error, Result};
use crate::model::{LtiSystem, StackedVector};
use crate::simulation::StepContext;

/// Solves `min_{z in S_k} f_k(z) + D(z, zbar_k)` exactly at every instant.
#[derive(Debug, Clone)]
pub struct OptimalPmhe {
    sys: LtiSystem,
    gain: DMatrix<f64>,
    geometry: BregmanGeometry,
    zbar: Option<StackedVector>,
    initial: DVector<f64>,
    ws: QpWorkspace,
}

impl OptimalPmhe {
    pub fn new(
        sys: LtiSystem,
        gain: DMatrix<f64>,
        geometry: BregmanGeometry,
        initial: DVector<f64>,
    ) -> Result<Self> {
        if gain.nrows() != sys.n() || gain.ncols() != sys.p() {
            return Err(Error::dim("observer gain", sys.n(), gain.nrows()));
        }
        if initial.len() != sys.n() {
            return Err(Error::dim("initial estimate", sys.n(), initial.len()));
        }
        Ok(Self {
            sys,
            gain,
            geometry,
            zbar: None,
            initial,
            ws: QpWorkspace::new(0),
        })
    }

    pub fn from_certificate(
        sys: LtiSystem,
        cert: &StabilityCertificate,
        initial: DVector<f64>,
    ) -> Result<Self> {
        if !cert.valid {
            return Err(Error::Config(format!(
                "certificate is not valid (LMI eigenvalue {:e})",
                cert.lmi_margin
            )));
        }
        Self::new(sys, cert.gain.clone(), cert.geometry()?, initial)
    }
}

impl Estimator for OptimalPmhe {
    fn name(&self) -> &str {
        "optimal"
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
        let metric = self.geometry.metric(layout)?;
        let h = ctx.problem.hessian() + &metric;
        let rhs = ctx.problem.linear_term() + &metric * zbar.data();
        let center = h
            .clone()
            .cholesky()
            .ok_or_else(|| wrap(k, 0)(Error::Config("regularized Hessian is singular".into())))?
            .solve(&rhs);
        self.ws.max_iters = 50 * set.rows().max(1);
        let z = self
            .ws
            .solve_centered(&h, &center, set.gmat(), set.ek())
            .map_err(wrap(k, 0))?;
        let z = StackedVector::new(layout, z)?;
        let loss = ctx.problem.loss(z.data());
        let estimate = reconstruct_state(&self.sys, &z, &ctx.window)?;
        self.zbar = Some(propagate(&self.sys, &self.gain, &z, &ctx.window)?);
        Ok(StepRecord {
            k,
            estimate,
            apriori: Some(zbar),
            iterates: vec![z],
            losses: vec![loss],
            step_sizes: Vec::new(),
            selected: 0,
            min_loss_index: 0,
        })
    }
}
