use nalgebra::DMatrix;

use super::qp::QpWorkspace;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Layout, PolytopeSet, ResidualMode, StackedVector};

/// `psi(z) = 1/2 z' blkdiag(P, W) z`, so that
/// `D(z1, z2) = 1/2 |x1 - x2|_P^2 + 1/2 |w1 - w2|_W^2`.
///
/// Shorter windows use the leading principal block of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanGeometry {
    p: DMatrix<f64>,
    w: DMatrix<f64>,
    sigma: f64,
    gamma: f64,
}

impl BregmanGeometry {
    /// `w` may be empty when residuals are pinned to zero.
    pub fn quadratic(p: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || !p.is_square() {
            return Err(Error::Config("state weight P must be square and nonempty".into()));
        }
        if !w.is_square() || !w.nrows().is_multiple_of(n) {
            return Err(Error::Config(format!(
                "residual weight W must be square with a multiple of {n} rows"
            )));
        }
        let p = linalg::symmetrize(&p);
        let w = linalg::symmetrize(&w);
        let full = linalg::block_diag(&[&p, &w]);
        let ev = linalg::sym_eigenvalues(&full);
        let (sigma, gamma) = (ev[0], ev[ev.len() - 1]);
        if sigma <= 0.0 {
            return Err(Error::Config(format!(
                "Bregman weight is not positive definite (smallest eigenvalue {sigma:e})"
            )));
        }
        Ok(Self { p, w, sigma, gamma })
    }

    /// `P = I`, `W = I` over `horizon` residual blocks.
    pub fn euclidean(n: usize, horizon: usize) -> Self {
        Self::quadratic(DMatrix::identity(n, n), DMatrix::identity(n * horizon, n * horizon))
            .expect("identity weights are positive definite")
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Strong convexity modulus of `psi`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Smoothness modulus of `psi`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// The weight matrix acting on vectors of the given layout.
    pub fn metric(&self, layout: Layout) -> Result<DMatrix<f64>> {
        if layout.n != self.n() {
            return Err(Error::dim("geometry state dimension", self.n(), layout.n));
        }
        let rd = layout.residual_dim();
        if rd > self.w.nrows() {
            return Err(Error::dim("geometry residual dimension", self.w.nrows(), rd));
        }
        if layout.residuals == ResidualMode::FixedZero || rd == 0 {
            return Ok(self.p.clone());
        }
        let wk = self.w.view((0, 0), (rd, rd)).into_owned();
        Ok(linalg::block_diag(&[&self.p, &wk]))
    }

    fn pair_check(&self, a: &StackedVector, b: &StackedVector) -> Result<DMatrix<f64>> {
        if a.layout() != b.layout() {
            return Err(Error::dim("Bregman arguments", a.dim(), b.dim()));
        }
        self.metric(a.layout())
    }

    pub fn psi(&self, z: &StackedVector) -> Result<f64> {
        let m = self.metric(z.layout())?;
        Ok(0.5 * z.data().dot(&(&m * z.data())))
    }

    pub fn grad_psi(&self, z: &StackedVector) -> Result<StackedVector> {
        let m = self.metric(z.layout())?;
        StackedVector::new(z.layout(), &m * z.data())
    }

    pub fn distance(&self, z1: &StackedVector, z2: &StackedVector) -> Result<f64> {
        let m = self.pair_check(z1, z2)?;
        let d = z1.data() - z2.data();
        Ok((0.5 * d.dot(&(&m * &d))).max(0.0))
    }

    /// `[D(c,a) + D(a,b) - D(c,b)] - (grad psi(b) - grad psi(a))'(c - a)`.
    pub fn three_points_gap(
        &self,
        a: &StackedVector,
        b: &StackedVector,
        c: &StackedVector,
    ) -> Result<f64> {
        self.pair_check(a, c)?;
        let m = self.pair_check(a, b)?;
        let lhs = self.distance(c, a)? + self.distance(a, b)? - self.distance(c, b)?;
        let dg = &m * (b.data() - a.data());
        Ok(lhs - dg.dot(&(c.data() - a.data())))
    }

    /// Bregman projection of `zbar` onto `set`.
    pub fn project(&self, zbar: &StackedVector, set: &PolytopeSet) -> Result<StackedVector> {
        let mut ws = QpWorkspace::new(set.rows());
        self.project_with(&mut ws, zbar, set)
    }

    pub fn project_with(
        &self,
        ws: &mut QpWorkspace,
        zbar: &StackedVector,
        set: &PolytopeSet,
    ) -> Result<StackedVector> {
        self.set_check(zbar, set)?;
        let m = self.metric(zbar.layout())?;
        let x = ws.solve_centered(&m, zbar.data(), set.gmat(), set.ek())?;
        StackedVector::new(zbar.layout(), x)
    }

    /// `argmin_{z in set} eta g'z + D(z, center)`.
    pub fn mirror_subproblem(
        &self,
        gradient: &StackedVector,
        eta: f64,
        center: &StackedVector,
        set: &PolytopeSet,
    ) -> Result<StackedVector> {
        let mut ws = QpWorkspace::new(set.rows());
        self.mirror_subproblem_with(&mut ws, gradient, eta, center, set)
    }

    pub fn mirror_subproblem_with(
        &self,
        ws: &mut QpWorkspace,
        gradient: &StackedVector,
        eta: f64,
        center: &StackedVector,
        set: &PolytopeSet,
    ) -> Result<StackedVector> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Schedule(format!("step size must be nonnegative, got {eta}")));
        }
        self.set_check(center, set)?;
        let m = self.pair_check(gradient, center)?;
        let shifted = if eta == 0.0 {
            center.data().clone()
        } else {
            let step = m
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Config("Bregman weight lost definiteness".into()))?
                .solve(gradient.data());
            center.data() - step * eta
        };
        let x = ws.solve_centered(&m, &shifted, set.gmat(), set.ek())?;
        StackedVector::new(center.layout(), x)
    }

    /// `D(P(zbar), zbar) <= D(z, zbar) - D(z, P(zbar)) + 1e-8` for feasible `z`.
    pub fn pythagoras_check(
        &self,
        zbar: &StackedVector,
        z: &StackedVector,
        set: &PolytopeSet,
    ) -> Result<bool> {
        let proj = self.project(zbar, set)?;
        let lhs = self.distance(&proj, zbar)?;
        let rhs = self.distance(z, zbar)? - self.distance(z, &proj)?;
        Ok(lhs <= rhs + 1e-8)
    }

    fn set_check(&self, z: &StackedVector, set: &PolytopeSet) -> Result<()> {
        if z.layout() != set.layout() {
            return Err(Error::dim("point versus constraint set", set.layout().dim(), z.dim()));
        }
        Ok(())
    }
}
