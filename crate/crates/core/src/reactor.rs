//! Three-state chemical reactor benchmark (sampling time 0.25) with a single
//! pressure-like output.

use nalgebra::{Complex, DMatrix, DVector};

use crate::model::{LtiSystem, StageWeights, StateConstraints};

pub const HORIZON: usize = 2;
pub const OUTPUT_WEIGHT: f64 = 0.01;
pub const POLES: [f64; 3] = [0.4754, 0.8497, 0.9727];
pub const SIM_STEPS: usize = 100;

pub fn system() -> LtiSystem {
    let a = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.8831, 0.0078, 0.0022, //
            0.1150, 0.9563, 0.0028, //
            0.1178, 0.0102, 0.9954,
        ],
    );
    let b = DMatrix::zeros(3, 1);
    let c = DMatrix::from_row_slice(1, 3, &[32.84, 32.84, 32.84]);
    LtiSystem::new(a, b, c).expect("reactor matrices are consistent")
}

pub fn poles() -> Vec<Complex<f64>> {
    POLES.iter().map(|&p| Complex::new(p, 0.0)).collect()
}

/// Only the window-head state is a decision variable.
pub fn weights() -> StageWeights {
    StageWeights::output_only(DMatrix::from_element(1, 1, OUTPUT_WEIGHT), 3)
}

pub fn constraints() -> StateConstraints {
    StateConstraints::nonnegative(3)
}

/// Default true initial state; not taken from any published run.
pub fn initial_state() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 0.5, 2.0])
}

pub fn initial_estimate() -> DVector<f64> {
    DVector::zeros(3)
}
