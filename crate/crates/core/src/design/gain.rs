use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::LtiSystem;

/// Observer gain `L` (n x 1) placing the eigenvalues of `A - L C` at `poles`
/// via Ackermann's formula. Complex poles must come in conjugate pairs.
pub fn place_gain(sys: &LtiSystem, poles: &[Complex<f64>]) -> Result<DMatrix<f64>> {
    let n = sys.n();
    if sys.p() != 1 {
        return Err(Error::UnsupportedPlacement { outputs: sys.p() });
    }
    if poles.len() != n {
        return Err(Error::Placement(format!(
            "expected {n} poles, got {}",
            poles.len()
        )));
    }

    let mut poly = vec![Complex::new(1.0, 0.0)];
    for &pole in poles {
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * pole;
        }
        poly = next;
    }
    let scale = 1.0 + poly.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if poly.iter().any(|c| c.im.abs() > 1e-9 * scale) {
        return Err(Error::Placement(
            "complex poles must appear in conjugate pairs".into(),
        ));
    }
    let coeffs: Vec<f64> = poly.iter().map(|c| c.re).collect();

    let obs = sys.observability_matrix();
    if linalg::rank(&obs, 1e-12) < n {
        return Err(Error::Placement(
            "(A, C) is not observable; supply L directly".into(),
        ));
    }
    let mut e_last = DVector::zeros(n);
    e_last[n - 1] = 1.0;
    let v = obs
        .lu()
        .solve(&e_last)
        .ok_or_else(|| Error::Placement("observability matrix is singular".into()))?;
    let gain = linalg::matrix_polynomial(sys.a(), &coeffs) * v;

    let closed = sys.a() - &gain * sys.c();
    let achieved = linalg::characteristic_polynomial(&closed);
    let err = achieved
        .iter()
        .zip(&coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if err > 1e-8 * scale {
        return Err(Error::Placement(format!(
            "placement is numerically inaccurate (coefficient error {err:e})"
        )));
    }
    Ok(DMatrix::from_column_slice(n, 1, gain.as_slice()))
}
