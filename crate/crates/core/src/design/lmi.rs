use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::LtiSystem;

/// Solves `X' P X - P = -(Q + eps I)` for `X = A - L C` and
/// `eps = 1e-6 lambda_min(Q)`, which makes the strict inequality
/// `X' P X - P + Q < 0` hold with margin `eps`.
pub fn solve_lmi(sys: &LtiSystem, gain: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sys.n();
    if gain.nrows() != n || gain.ncols() != sys.p() {
        return Err(Error::dim("observer gain rows", n, gain.nrows()));
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::dim("LMI slack Q", n, q.nrows()));
    }
    let q = linalg::symmetrize(q);
    let qmin = linalg::lambda_min(&q);
    if qmin <= 0.0 {
        return Err(Error::Config(format!(
            "LMI slack Q must be positive definite (smallest eigenvalue {qmin:e})"
        )));
    }
    let closed = sys.a() - gain * sys.c();
    let rho = linalg::spectral_radius(&closed);
    if rho >= 1.0 {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    let rhs = &q + DMatrix::identity(n, n) * (1e-6 * qmin);
    let xt = closed.transpose();
    let op = DMatrix::identity(n * n, n * n) - xt.kronecker(&xt);
    let vec_p = op
        .lu()
        .solve(&DVector::from_column_slice(rhs.as_slice()))
        .ok_or(Error::Unstable { spectral_radius: rho })?;
    Ok(linalg::symmetrize(&DMatrix::from_column_slice(
        n,
        n,
        vec_p.as_slice(),
    )))
}
