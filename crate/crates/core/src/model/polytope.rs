use nalgebra::{DMatrix, DVector};

use super::condensed::{check_window, input_offsets, state_maps};
use super::{Layout, LtiSystem, MeasurementWindow, ResidualMode, StackedVector};
use crate::bregman::qp::QpWorkspace;
use crate::error::{Error, Result};

const INTERIOR_MARGIN: f64 = 1e-8;

/// `C_x x <= d_x`, imposed on every state in the window.
#[derive(Debug, Clone, PartialEq)]
pub struct StateConstraints {
    pub cx: DMatrix<f64>,
    pub dx: DVector<f64>,
}

impl StateConstraints {
    pub fn new(cx: DMatrix<f64>, dx: DVector<f64>) -> Result<Self> {
        if cx.nrows() != dx.len() {
            return Err(Error::dim("state constraint rows", cx.nrows(), dx.len()));
        }
        Ok(Self { cx, dx })
    }

    pub fn nonnegative(n: usize) -> Self {
        Self {
            cx: -DMatrix::identity(n, n),
            dx: DVector::zeros(n),
        }
    }

    pub fn none(n: usize) -> Self {
        Self {
            cx: DMatrix::zeros(0, n),
            dx: DVector::zeros(0),
        }
    }

    pub fn rows(&self) -> usize {
        self.cx.nrows()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.cx.nrows() == 0 || (&self.cx * x - &self.dx).max() <= tol
    }
}

/// Stacked constraint set `G x + F w <= E_k`.
#[derive(Debug, Clone)]
pub struct PolytopeSet {
    layout: Layout,
    gmat: DMatrix<f64>,
    ek: DVector<f64>,
}

impl PolytopeSet {
    pub fn from_parts(layout: Layout, gmat: DMatrix<f64>, ek: DVector<f64>) -> Result<Self> {
        if gmat.ncols() != layout.dim() {
            return Err(Error::dim("polytope columns", layout.dim(), gmat.ncols()));
        }
        if gmat.nrows() != ek.len() {
            return Err(Error::dim("polytope rows", gmat.nrows(), ek.len()));
        }
        Ok(Self { layout, gmat, ek })
    }

    pub fn unconstrained(layout: Layout) -> Self {
        Self {
            layout,
            gmat: DMatrix::zeros(0, layout.dim()),
            ek: DVector::zeros(0),
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        self.gmat.nrows()
    }

    pub fn gmat(&self) -> &DMatrix<f64> {
        &self.gmat
    }

    pub fn ek(&self) -> &DVector<f64> {
        &self.ek
    }

    /// Columns acting on the window-head state.
    pub fn state_block(&self) -> DMatrix<f64> {
        self.gmat.columns(0, self.layout.n).into_owned()
    }

    /// Columns acting on the residuals; empty when residuals are pinned.
    pub fn residual_block(&self) -> DMatrix<f64> {
        self.gmat
            .columns(self.layout.n, self.layout.residual_dim())
            .into_owned()
    }

    pub fn tol(&self) -> f64 {
        1e-9 * (1.0 + self.ek.amax())
    }

    /// `max_i (G z - E)_i`, or `-inf` with no rows.
    pub fn max_violation(&self, z: &DVector<f64>) -> f64 {
        if self.rows() == 0 {
            return f64::NEG_INFINITY;
        }
        (&self.gmat * z - &self.ek).max()
    }

    pub fn contains(&self, z: &StackedVector) -> bool {
        z.dim() == self.layout.dim() && self.max_violation(z.data()) <= self.tol()
    }

    /// Solves `min 1/2 |z|^2` over the set shrunk by a small slack.
    fn probe_interior(&self) -> Result<()> {
        if self.rows() == 0 {
            return Ok(());
        }
        let mut shrunk = self.ek.clone();
        for i in 0..self.rows() {
            shrunk[i] -= INTERIOR_MARGIN * self.gmat.row(i).norm();
        }
        let dim = self.layout.dim();
        let mut ws = QpWorkspace::new(self.rows());
        match ws.solve_centered(
            &DMatrix::identity(dim, dim),
            &DVector::zeros(dim),
            &self.gmat,
            &shrunk,
        ) {
            Ok(_) => Ok(()),
            Err(Error::Infeasible) => Err(Error::Config(
                "state constraint set has empty interior over the window".into(),
            )),
            Err(e) => Err(e),
        }
    }
}

pub fn build_polytope(
    constraints: &StateConstraints,
    sys: &LtiSystem,
    window: &MeasurementWindow,
    residuals: ResidualMode,
) -> Result<PolytopeSet> {
    let n = sys.n();
    if constraints.cx.ncols() != n {
        return Err(Error::dim("state constraint columns", n, constraints.cx.ncols()));
    }
    check_window(sys, window)?;
    let layout = Layout::new(n, window.len(), residuals);
    let qx = constraints.rows();
    let maps = state_maps(sys.a(), layout);
    let offsets = input_offsets(sys, window);
    let blocks = maps.len();
    let mut gmat = DMatrix::zeros(qx * blocks, layout.dim());
    let mut ek = DVector::zeros(qx * blocks);
    for (l, (x, ut)) in maps.iter().zip(&offsets).enumerate() {
        gmat.view_mut((l * qx, 0), (qx, layout.dim()))
            .copy_from(&(&constraints.cx * x));
        ek.rows_mut(l * qx, qx)
            .copy_from(&(&constraints.dx - &constraints.cx * ut));
    }
    let set = PolytopeSet::from_parts(layout, gmat, ek)?;
    set.probe_interior()?;
    Ok(set)
}
