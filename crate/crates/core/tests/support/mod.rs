#![allow(dead_code)]

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use pmhe::model::{LtiSystem, MeasurementWindow, StateConstraints};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
}

pub fn vector(r: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| r.random_range(-scale..scale))
}

/// Symmetric with eigenvalues in roughly `[lo, lo + spread]`.
pub fn spd(r: &mut ChaCha8Rng, n: usize, lo: f64, spread: f64) -> DMatrix<f64> {
    let m = matrix(r, n, n, 1.0);
    let s = &m * m.transpose();
    let top = s.symmetric_eigenvalues().max().max(1e-12);
    s * (spread / top) + DMatrix::identity(n, n) * lo
}

/// Random system whose transition matrix has spectral radius `radius`.
pub fn system(r: &mut ChaCha8Rng, n: usize, m: usize, p: usize, radius: f64) -> LtiSystem {
    let raw = matrix(r, n, n, 1.0);
    let rho = pmhe::linalg::spectral_radius(&raw).max(1e-6);
    LtiSystem::new(raw * (radius / rho), matrix(r, n, m, 1.0), matrix(r, p, n, 1.0)).unwrap()
}

/// Simulates `steps` samples from `x0` with the given inputs and returns
/// the states `x_0..=x_steps` and the window after the last push.
pub fn roll_out(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    inputs: &[DVector<f64>],
    horizon: usize,
) -> (Vec<DVector<f64>>, MeasurementWindow) {
    let mut w = MeasurementWindow::new(horizon);
    let mut xs = vec![x0.clone()];
    for u in inputs {
        let x = xs.last().unwrap().clone();
        w.push(sys.output(&x), u.clone());
        xs.push(sys.step(&x, u));
    }
    (xs, w)
}

/// Box `|x_i| <= bound` as `C_x x <= d_x`.
pub fn boxed(n: usize, bound: f64) -> StateConstraints {
    let mut cx = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        cx[(2 * i, i)] = 1.0;
        cx[(2 * i + 1, i)] = -1.0;
    }
    StateConstraints::new(cx, DVector::from_element(2 * n, bound)).unwrap()
}

/// Largest eigenvalue by power iteration on a symmetric PSD matrix.
pub fn power_iteration(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub fn reactor_certificate() -> pmhe::StabilityCertificate {
    use pmhe::design::*;
    use pmhe::reactor;
    let sys = reactor::system();
    let gain = place_gain(&sys, &reactor::poles()).unwrap();
    let q = DMatrix::identity(3, 3);
    let p = solve_lmi(&sys, &gain, &q).unwrap();
    let prob = horizon_problem(&sys, reactor::HORIZON, &reactor::weights()).unwrap();
    certify(&sys, &gain, &p, None, &q, &prob, SmoothnessMode::Formula).unwrap()
}

pub fn reactor_run(kind: pmhe::StepKind, it: usize) -> (pmhe::Simulation, pmhe::EstimateTrace) {
    use pmhe::*;
    let cert = reactor_certificate();
    let sim = Simulation::run(&Scenario::reactor()).unwrap();
    let schedule = make_schedule(&cert, kind, Budget::Constant(it), true).unwrap();
    let x0 = reactor::initial_estimate();
    let mut est = AnytimePmhe::from_certificate(reactor::system(), &cert, schedule, x0.clone()).unwrap();
    let trace = EstimateTrace::collect(&mut est, &sim, &x0).unwrap();
    (sim, trace)
}
