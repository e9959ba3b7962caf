//! Dense dual active-set solver for small strictly convex QPs.
//!
//! Solves
//!
//! ```text
//!     minimize     1/2 (z - c)' H (z - c)
//!     subject to   G z <= e
//! ```
//!
//! starting from the unconstrained minimizer `c` and adding violated rows one
//! at a time (Goldfarb–Idnani). Every projection and proximal step in this
//! crate reduces to this form, so the start point is the point being
//! projected and a feasible `c` is returned untouched.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const DEPENDENCE_TOL: f64 = 1e-10;

/// Per-call scratch and diagnostics for [`QpWorkspace::solve_centered`].
#[derive(Debug, Clone)]
pub struct QpWorkspace {
    /// Rows of `G` that are tight at the solution, in insertion order.
    pub active_set: Vec<usize>,
    /// Multipliers aligned with `active_set`.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub iterations: usize,
}

impl QpWorkspace {
    pub fn new(rows: usize) -> Self {
        Self {
            active_set: Vec::new(),
            multipliers: Vec::new(),
            kkt_residual: 0.0,
            max_iters: 50 * rows.max(1),
            tol: 1e-8,
            iterations: 0,
        }
    }

    pub fn solve_centered(
        &mut self,
        h: &DMatrix<f64>,
        center: &DVector<f64>,
        g: &DMatrix<f64>,
        e: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let dim = center.len();
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::dim("qp hessian", dim, h.nrows()));
        }
        if g.ncols() != dim && g.nrows() > 0 {
            return Err(Error::dim("qp constraint columns", dim, g.ncols()));
        }
        if g.nrows() != e.len() {
            return Err(Error::dim("qp constraint rows", g.nrows(), e.len()));
        }
        self.active_set.clear();
        self.multipliers.clear();
        self.iterations = 0;
        self.kkt_residual = 0.0;

        let mut x = center.clone();
        let rows = g.nrows();
        let row_l1: Vec<f64> = (0..rows).map(|i| g.row(i).abs().sum()).collect();

        loop {
            let xmax = x.amax();
            let mut entering: Option<(usize, f64)> = None;
            for i in 0..rows {
                if self.active_set.contains(&i) {
                    continue;
                }
                let viol = g.row(i).dot(&x.transpose()) - e[i];
                let thr = 1e-11 * (1.0 + e[i].abs() + row_l1[i] * xmax);
                if viol > thr && entering.is_none_or(|(_, best)| viol > best) {
                    entering = Some((i, viol));
                }
            }
            let Some((p, _)) = entering else { break };
            let np: DVector<f64> = g.row(p).transpose();
            let mut up = 0.0;

            loop {
                self.iterations += 1;
                if self.iterations > self.max_iters {
                    let residual = self.residual(h, center, g, e, &x);
                    return Err(Error::SolverFailure {
                        iterations: self.iterations,
                        residual,
                    });
                }
                let (dx, du) = self.kkt_direction(h, g, &np)?;
                let dependent = self.is_dependent(g, &np);

                let viol = np.dot(&x) - e[p];
                let curvature = -np.dot(&dx);
                let t_full = if dependent || curvature <= 0.0 {
                    f64::INFINITY
                } else {
                    (viol / curvature).max(0.0)
                };

                let mut t_dual = f64::INFINITY;
                let mut blocking: Option<usize> = None;
                for (slot, (&row, &u)) in self.active_set.iter().zip(&self.multipliers).enumerate()
                {
                    if du[slot] < 0.0 {
                        let t = -u / du[slot];
                        let better = t < t_dual
                            || (t == t_dual
                                && blocking.is_some_and(|b| row < self.active_set[b]));
                        if better {
                            t_dual = t;
                            blocking = Some(slot);
                        }
                    }
                }

                let t = t_full.min(t_dual);
                if !t.is_finite() {
                    return Err(Error::Infeasible);
                }
                if !dependent {
                    x.axpy(t, &dx, 1.0);
                }
                for (u, d) in self.multipliers.iter_mut().zip(du.iter()) {
                    *u += t * d;
                }
                up += t;

                if t_full <= t_dual {
                    self.active_set.push(p);
                    self.multipliers.push(up);
                    break;
                }
                let slot = blocking.expect("finite dual step has a blocking row");
                self.active_set.remove(slot);
                self.multipliers.remove(slot);
            }
        }

        self.kkt_residual = self.residual(h, center, g, e, &x);
        if self.kkt_residual > self.tol {
            return Err(Error::SolverFailure {
                iterations: self.iterations,
                residual: self.kkt_residual,
            });
        }
        Ok(x)
    }

    /// Primal/dual direction for raising the multiplier of `np` while the
    /// current active rows stay tight.
    fn kkt_direction(
        &self,
        h: &DMatrix<f64>,
        g: &DMatrix<f64>,
        np: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let dim = h.nrows();
        let na = self.active_set.len();
        let mut kkt = DMatrix::zeros(dim + na, dim + na);
        kkt.view_mut((0, 0), (dim, dim)).copy_from(h);
        for (slot, &row) in self.active_set.iter().enumerate() {
            for j in 0..dim {
                kkt[(dim + slot, j)] = g[(row, j)];
                kkt[(j, dim + slot)] = g[(row, j)];
            }
        }
        let mut rhs = DVector::zeros(dim + na);
        rhs.rows_mut(0, dim).copy_from(&(-np));
        let sol = kkt.lu().solve(&rhs).ok_or(Error::SolverFailure {
            iterations: self.iterations,
            residual: f64::INFINITY,
        })?;
        Ok((sol.rows(0, dim).into_owned(), sol.rows(dim, na).into_owned()))
    }

    fn is_dependent(&self, g: &DMatrix<f64>, np: &DVector<f64>) -> bool {
        if self.active_set.is_empty() {
            return np.norm() == 0.0;
        }
        let dim = np.len();
        let mut na = DMatrix::zeros(self.active_set.len(), dim);
        for (slot, &row) in self.active_set.iter().enumerate() {
            na.row_mut(slot).copy_from(&g.row(row));
        }
        let gram = &na * na.transpose();
        let Some(coef) = gram.lu().solve(&(&na * np)) else {
            return false;
        };
        let resid = np - na.transpose() * coef;
        resid.norm() <= DEPENDENCE_TOL * np.norm()
    }

    fn residual(
        &self,
        h: &DMatrix<f64>,
        center: &DVector<f64>,
        g: &DMatrix<f64>,
        e: &DVector<f64>,
        x: &DVector<f64>,
    ) -> f64 {
        let mut grad = h * (x - center);
        for (&row, &u) in self.active_set.iter().zip(&self.multipliers) {
            grad.axpy(u, &g.row(row).transpose(), 1.0);
        }
        let scale = 1.0 + h.amax() * (x.amax() + center.amax());
        let stationarity = grad.amax() / scale;

        let escale = 1.0 + e.amax();
        let mut primal: f64 = 0.0;
        for i in 0..g.nrows() {
            let s = g.row(i).dot(&x.transpose()) - e[i];
            primal = primal.max(s.max(0.0) / (escale + g.row(i).abs().sum() * x.amax()));
        }
        let mut dual: f64 = 0.0;
        let mut compl: f64 = 0.0;
        for (&row, &u) in self.active_set.iter().zip(&self.multipliers) {
            dual = dual.max((-u).max(0.0));
            let s = g.row(row).dot(&x.transpose()) - e[row];
            compl = compl.max((u * s).abs() / scale);
        }
        stationarity.max(primal).max(dual / scale).max(compl)
    }
}
