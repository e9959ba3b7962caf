use thiserror::Error;

/// Errors raised by model construction, the QP layer, certificate synthesis
/// and the online estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("QP solver failed after {iterations} iterations (KKT residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("infeasible constraint set")]
    Infeasible,

    #[error("closed loop A - LC is not Schur stable (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("pole placement failed: {0}")]
    Placement(String),

    #[error("pole placement requires a single output, system has {outputs}")]
    UnsupportedPlacement { outputs: usize },

    #[error("invalid step schedule: {0}")]
    Schedule(String),

    #[error("comparator entry at k = {k} is infeasible (violation {violation:e})")]
    Comparator { k: usize, violation: f64 },

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("estimator diverged at k = {k} (iterate norm {norm:e})")]
    Divergence { k: usize, norm: f64 },

    #[error("estimator failed at k = {k}, iteration {iteration}: {source}")]
    Estimator {
        k: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }

    /// KKT residual carried by a solver failure, if any.
    pub fn residual(&self) -> Option<f64> {
        match self {
            Error::SolverFailure { residual, .. } => Some(*residual),
            Error::Estimator { source, .. } => source.residual(),
            _ => None,
        }
    }
}
