use nalgebra::DVector;

use crate::error::Result;
use crate::linalg;
use crate::model::{
    build_condensed, CondensedProblem, LtiSystem, MeasurementWindow, ResidualMode, StageWeights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothnessMode {
    /// Largest Hessian eigenvalue.
    Hessian,
    /// `lambda_max(R) sum_l |C A^l|^2`, an upper bound of the Hessian norm.
    /// With free residuals the full output maps are used and
    /// `lambda_max(Qw)` is added.
    #[default]
    Formula,
}

pub fn smoothness_constant(prob: &CondensedProblem, mode: SmoothnessMode) -> f64 {
    match mode {
        SmoothnessMode::Hessian => linalg::lambda_max(prob.hessian()).max(0.0),
        SmoothnessMode::Formula => {
            let r = linalg::lambda_max(prob.stage_weight_r()).max(0.0);
            match prob.layout().residuals {
                ResidualMode::FixedZero => {
                    r * prob
                        .obs_rows()
                        .iter()
                        .map(|o| linalg::spectral_norm(o).powi(2))
                        .sum::<f64>()
                }
                ResidualMode::Free => {
                    let outputs: f64 = prob
                        .output_maps()
                        .iter()
                        .map(|m| linalg::spectral_norm(m).powi(2))
                        .sum();
                    let qw = if prob.horizon() > 0 {
                        linalg::lambda_max(prob.stage_weight_qw()).max(0.0)
                    } else {
                        0.0
                    };
                    r * outputs + qw
                }
            }
        }
    }
}

/// A full-horizon problem on zero data. The Hessian does not depend on the
/// measurements, so this is what the certificate is computed from.
pub fn horizon_problem(
    sys: &LtiSystem,
    horizon: usize,
    weights: &StageWeights,
) -> Result<CondensedProblem> {
    let mut window = MeasurementWindow::new(horizon.max(1));
    for _ in 0..horizon.max(1) {
        window.push(DVector::zeros(sys.p()), DVector::zeros(sys.m()));
    }
    build_condensed(sys, &window, weights)
}
