use nalgebra::{DMatrix, DVector};

use super::{Layout, LtiSystem, MeasurementWindow, ResidualMode, StackedVector};
use crate::error::{Error, Result};
use crate::linalg;

/// Quadratic stage costs `1/2 |v|_R^2` on output residuals and
/// `1/2 |w|_Qw^2` on model residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct StageWeights {
    pub r: DMatrix<f64>,
    pub qw: DMatrix<f64>,
    pub residuals: ResidualMode,
}

impl StageWeights {
    pub fn new(r: DMatrix<f64>, qw: DMatrix<f64>, residuals: ResidualMode) -> Self {
        Self { r, qw, residuals }
    }

    /// Output penalty only, residuals pinned to zero.
    pub fn output_only(r: DMatrix<f64>, n: usize) -> Self {
        Self::new(r, DMatrix::zeros(n, n), ResidualMode::FixedZero)
    }
}

/// `f_k(z) = 1/2 sum_l |y_l - C x_l(z)|_R^2 + 1/2 sum_j |w_j|_Qw^2` over the
/// current window, where `x_l(z)` is the state reached from the window head.
#[derive(Debug, Clone)]
pub struct CondensedProblem {
    layout: Layout,
    state_maps: Vec<DMatrix<f64>>,
    input_offsets: Vec<DVector<f64>>,
    obs_rows: Vec<DMatrix<f64>>,
    output_maps: Vec<DMatrix<f64>>,
    targets: Vec<DVector<f64>>,
    r: DMatrix<f64>,
    qw: DMatrix<f64>,
    hessian: DMatrix<f64>,
}

/// Linear maps `z -> x_{k-h+l} - u~_l` for `l = 0..=h`.
pub(crate) fn state_maps(a: &DMatrix<f64>, layout: Layout) -> Vec<DMatrix<f64>> {
    let (n, h) = (layout.n, layout.horizon);
    let pw = linalg::powers(a, h + 1);
    (0..=h)
        .map(|l| {
            let mut x = DMatrix::zeros(n, layout.dim());
            x.view_mut((0, 0), (n, n)).copy_from(&pw[l]);
            if layout.residuals == ResidualMode::Free {
                for j in 0..l {
                    x.view_mut((0, n * (j + 1)), (n, n)).copy_from(&pw[l - 1 - j]);
                }
            }
            x
        })
        .collect()
}

/// Input contributions `u~_l = sum_{j<l} A^{l-1-j} B u_j` for `l = 0..=h`.
pub(crate) fn input_offsets(sys: &LtiSystem, window: &MeasurementWindow) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(window.len() + 1);
    let mut acc = DVector::zeros(sys.n());
    out.push(acc.clone());
    for u in window.us() {
        acc = sys.a() * &acc + sys.b() * u;
        out.push(acc.clone());
    }
    out
}

pub(crate) fn check_window(sys: &LtiSystem, window: &MeasurementWindow) -> Result<()> {
    for y in window.ys() {
        if y.len() != sys.p() {
            return Err(Error::dim("window measurement", sys.p(), y.len()));
        }
    }
    for u in window.us() {
        if u.len() != sys.m() {
            return Err(Error::dim("window input", sys.m(), u.len()));
        }
    }
    Ok(())
}

pub fn build_condensed(
    sys: &LtiSystem,
    window: &MeasurementWindow,
    weights: &StageWeights,
) -> Result<CondensedProblem> {
    let (n, p) = (sys.n(), sys.p());
    if weights.r.nrows() != p || weights.r.ncols() != p {
        return Err(Error::Config(format!(
            "output weight R must be {p}x{p}, got {}x{}",
            weights.r.nrows(),
            weights.r.ncols()
        )));
    }
    if weights.qw.nrows() != n || weights.qw.ncols() != n {
        return Err(Error::Config(format!(
            "residual weight Qw must be {n}x{n}, got {}x{}",
            weights.qw.nrows(),
            weights.qw.ncols()
        )));
    }
    if !linalg::is_symmetric_psd(&weights.r, 1e-10) {
        return Err(Error::Config("output weight R is not symmetric PSD".into()));
    }
    if !linalg::is_symmetric_psd(&weights.qw, 1e-10) {
        return Err(Error::Config("residual weight Qw is not symmetric PSD".into()));
    }
    if window.is_empty() {
        return Err(Error::Range("measurement window is empty".into()));
    }
    check_window(sys, window)?;

    let layout = Layout::new(n, window.len(), weights.residuals);
    let h = layout.horizon;
    let state_maps = state_maps(sys.a(), layout);
    let input_offsets = input_offsets(sys, window);
    let obs_rows: Vec<_> = linalg::powers(sys.a(), h)
        .iter()
        .map(|ap| sys.c() * ap)
        .collect();
    let output_maps: Vec<_> = state_maps[..h].iter().map(|x| sys.c() * x).collect();
    let targets: Vec<_> = (0..h)
        .map(|l| window.y(l) - sys.c() * &input_offsets[l])
        .collect();

    let r = linalg::symmetrize(&weights.r);
    let qw = linalg::symmetrize(&weights.qw);
    let mut hessian = DMatrix::zeros(layout.dim(), layout.dim());
    for m in &output_maps {
        hessian += m.transpose() * &r * m;
    }
    if layout.residuals == ResidualMode::Free {
        for j in 0..h {
            let off = n * (j + 1);
            let mut blk = hessian.view_mut((off, off), (n, n));
            blk += &qw;
        }
    }
    let hessian = linalg::symmetrize(&hessian);

    Ok(CondensedProblem {
        layout,
        state_maps,
        input_offsets,
        obs_rows,
        output_maps,
        targets,
        r,
        qw,
        hessian,
    })
}

impl CondensedProblem {
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn horizon(&self) -> usize {
        self.layout.horizon
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// `O_l = C A^l`, `l < h`.
    pub fn obs_rows(&self) -> &[DMatrix<f64>] {
        &self.obs_rows
    }

    /// Full maps from `z` to predicted outputs, residual columns included.
    pub fn output_maps(&self) -> &[DMatrix<f64>] {
        &self.output_maps
    }

    pub fn input_offsets(&self) -> &[DVector<f64>] {
        &self.input_offsets
    }

    pub fn stage_weight_r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn stage_weight_qw(&self) -> &DMatrix<f64> {
        &self.qw
    }

    /// State `x_{k-h+l}` implied by `z`, `l = 0..=h`.
    pub fn predict_state(&self, l: usize, z: &DVector<f64>) -> DVector<f64> {
        &self.state_maps[l] * z + &self.input_offsets[l]
    }

    fn check(&self, z: &StackedVector) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::dim("decision vector", self.dim(), z.dim()));
        }
        Ok(())
    }

    pub fn eval_loss(&self, z: &StackedVector) -> Result<f64> {
        self.check(z)?;
        Ok(self.loss(z.data()))
    }

    pub fn eval_gradient(&self, z: &StackedVector) -> Result<StackedVector> {
        self.check(z)?;
        StackedVector::new(self.layout, self.gradient(z.data()))
    }

    /// Unchecked variant of [`Self::eval_loss`] on raw coordinates.
    pub fn loss(&self, z: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for (m, b) in self.output_maps.iter().zip(&self.targets) {
            let v = b - m * z;
            total += 0.5 * v.dot(&(&self.r * &v));
        }
        if self.layout.residuals == ResidualMode::Free {
            let n = self.layout.n;
            for j in 0..self.layout.horizon {
                let w = z.rows(n * (j + 1), n);
                total += 0.5 * w.dot(&(&self.qw * w));
            }
        }
        total.max(0.0)
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for (m, b) in self.output_maps.iter().zip(&self.targets) {
            let v = b - m * z;
            g -= m.transpose() * (&self.r * v);
        }
        if self.layout.residuals == ResidualMode::Free {
            let n = self.layout.n;
            for j in 0..self.layout.horizon {
                let off = n * (j + 1);
                let qw_w = &self.qw * z.rows(off, n);
                let mut blk = g.rows_mut(off, n);
                blk += qw_w;
            }
        }
        g
    }

    /// `sum_l M_l' R b_l`, so that `grad f = H z - linear_term`.
    pub fn linear_term(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (m, b) in self.output_maps.iter().zip(&self.targets) {
            out += m.transpose() * (&self.r * b);
        }
        out
    }
}
