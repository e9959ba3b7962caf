//! Brute-force reference solutions used to cross-check the active-set
//! solver and everything built on it.

use nalgebra::{DMatrix, DVector};

/// Minimizes `1/2 (z - c)' H (z - c)` subject to `G z <= e` by trying every
/// subset of rows as the active set and keeping the KKT point.
pub fn enumerate_qp(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    e: &DVector<f64>,
) -> Option<DVector<f64>> {
    let dim = c.len();
    let q = g.nrows();
    assert!(q <= 12, "enumeration oracle is exponential in the row count");
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1u32 << q) {
        let rows: Vec<usize> = (0..q).filter(|i| mask & (1 << i) != 0).collect();
        if rows.len() > dim {
            continue;
        }
        let na = rows.len();
        let mut kkt = DMatrix::zeros(dim + na, dim + na);
        kkt.view_mut((0, 0), (dim, dim)).copy_from(h);
        let mut rhs = DVector::zeros(dim + na);
        rhs.rows_mut(0, dim).copy_from(&(h * c));
        for (s, &r) in rows.iter().enumerate() {
            for j in 0..dim {
                kkt[(dim + s, j)] = g[(r, j)];
                kkt[(j, dim + s)] = g[(r, j)];
            }
            rhs[dim + s] = e[r];
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else { continue };
        if (&kkt * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            continue;
        }
        let z = sol.rows(0, dim).into_owned();
        let lam = sol.rows(dim, na);
        let scale = 1.0 + e.amax();
        if q > 0 && (g * &z - e).max() > 1e-9 * scale {
            continue;
        }
        if lam.iter().any(|l| *l < -1e-9 * (1.0 + h.amax())) {
            continue;
        }
        let d = &z - c;
        let obj = 0.5 * d.dot(&(h * &d));
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, z));
        }
    }
    best.map(|(_, z)| z)
}
