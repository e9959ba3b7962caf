//! Online estimators sharing one step interface.

mod anytime;
mod gmhe;
mod luenberger;
mod optimal;
mod trace;

pub use anytime::{AnytimePmhe, Centering};
pub use gmhe::Gmhe;
pub use luenberger::LuenbergerObserver;
pub use optimal::OptimalPmhe;
pub use trace::{EstimateTrace, TraceRecord};

use nalgebra::{DMatrix, DVector};

use crate::bregman::BregmanGeometry;
use crate::error::{Error, Result};
use crate::model::{Layout, LtiSystem, MeasurementWindow, ResidualMode, StackedVector};
use crate::simulation::StepContext;

/// Which iterate becomes the estimate and seeds the next a priori point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JSelect {
    #[default]
    LastIterate,
    /// Smallest loss, earliest index on ties.
    MinLoss,
}

/// Everything an estimator produced at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub estimate: DVector<f64>,
    pub apriori: Option<StackedVector>,
    /// `z^0, ..., z^it`; empty for observers without an optimization stage.
    pub iterates: Vec<StackedVector>,
    pub losses: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub selected: usize,
    pub min_loss_index: usize,
}

impl StepRecord {
    pub fn min_loss(&self) -> Option<f64> {
        self.losses.get(self.min_loss_index).copied()
    }

    pub fn selected_iterate(&self) -> Option<&StackedVector> {
        self.iterates.get(self.selected)
    }
}

pub trait Estimator: Send {
    fn name(&self) -> &str;

    /// Processes the window at `ctx.k` and returns `x_hat_k`.
    fn step(&mut self, ctx: &StepContext) -> Result<StepRecord>;

    /// Geometry used for the Lyapunov value in traces.
    fn geometry(&self) -> Option<&BregmanGeometry> {
        None
    }
}

/// `x_hat_k` from the window head and residuals by forward simulation.
pub fn reconstruct_state(
    sys: &LtiSystem,
    zhat: &StackedVector,
    window: &MeasurementWindow,
) -> Result<DVector<f64>> {
    let layout = zhat.layout();
    if layout.n != sys.n() {
        return Err(Error::dim("estimate state dimension", sys.n(), layout.n));
    }
    if layout.residuals == ResidualMode::Free && layout.horizon != window.len() {
        return Err(Error::dim("estimate horizon", window.len(), layout.horizon));
    }
    let mut x = zhat.head().into_owned();
    for (j, u) in window.us().enumerate() {
        x = sys.step(&x, u) + zhat.residual(j);
    }
    Ok(x)
}

/// Shifts the window head forward one step with the observer correction
/// built from the oldest measurement: `A x + B u + L (y - C x)`, residuals
/// reset to zero.
pub fn apriori_operator(
    sys: &LtiSystem,
    gain: &DMatrix<f64>,
    zhat: &StackedVector,
    window: &MeasurementWindow,
) -> Result<StackedVector> {
    if window.is_empty() {
        return Err(Error::Range("a priori update needs a measurement".into()));
    }
    if gain.nrows() != sys.n() || gain.ncols() != sys.p() {
        return Err(Error::dim("observer gain", sys.n(), gain.nrows()));
    }
    let x = zhat.head().into_owned();
    let next = sys.step(&x, window.u(0)) + gain * (window.y(0) - sys.output(&x));
    StackedVector::from_head(zhat.layout(), &next)
}

/// A priori point for the next instant: the observer update once the window
/// is full, otherwise the same head state (the window head has not moved).
pub(crate) fn propagate(
    sys: &LtiSystem,
    gain: &DMatrix<f64>,
    selected: &StackedVector,
    window: &MeasurementWindow,
) -> Result<StackedVector> {
    if window.is_full() {
        apriori_operator(sys, gain, selected, window)
    } else {
        Ok(selected.reshaped(selected.layout()))
    }
}

pub(crate) fn apriori_in(zbar: &StackedVector, layout: Layout) -> StackedVector {
    if zbar.layout() == layout {
        zbar.clone()
    } else {
        zbar.reshaped(layout)
    }
}

pub(crate) fn select(losses: &[f64], rule: JSelect) -> (usize, usize) {
    let mut best = 0;
    for (i, l) in losses.iter().enumerate() {
        if *l < losses[best] {
            best = i;
        }
    }
    let selected = match rule {
        JSelect::LastIterate => losses.len() - 1,
        JSelect::MinLoss => best,
    };
    (selected, best)
}

pub(crate) fn wrap(k: usize, iteration: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Estimator {
        k,
        iteration,
        source: Box::new(e),
    }
}
