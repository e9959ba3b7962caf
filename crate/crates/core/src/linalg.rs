//! Small dense helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = symmetrize(m);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Numerical rank with relative tolerance on the singular values.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * top).count()
}

pub fn is_symmetric_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
        && lambda_min(m) >= -tol * (1.0 + m.amax())
}

/// Block-diagonal matrix built from square blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(dim, dim);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

/// `A^0, A^1, ..., A^count-1`.
pub fn powers(a: &DMatrix<f64>, count: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut cur = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..count {
        out.push(cur.clone());
        cur = a * &cur;
    }
    out
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// Coefficients `c_0, ..., c_n` of `det(sI - A)`, with `c_n = 1`.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * coeffs[n + 1 - k];
        coeffs[n - k] = -(a * &m).trace() / k as f64;
    }
    coeffs
}

/// `sum_i coeffs[i] A^i`.
pub fn matrix_polynomial(a: &DMatrix<f64>, coeffs: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for c in coeffs.iter().rev() {
        out = a * out + DMatrix::identity(n, n) * *c;
    }
    out
}
