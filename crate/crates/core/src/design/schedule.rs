use super::StabilityCertificate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepKind {
    #[default]
    Constant,
    /// `base / sqrt(k)`.
    InverseSqrt,
}

/// Number of mirror steps per time instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Budget {
    Constant(usize),
    /// `it(k)` for `k = 1, 2, ...`; the last entry repeats past the end.
    Sequence(Vec<usize>),
}

impl Budget {
    pub fn at(&self, k: usize) -> usize {
        match self {
            Budget::Constant(it) => *it,
            Budget::Sequence(seq) => match seq.len() {
                0 => 0,
                len => seq[k.saturating_sub(1).min(len - 1)],
            },
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        match self {
            Budget::Constant(_) => true,
            Budget::Sequence(seq) => seq.windows(2).all(|w| w[1] <= w[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    kind: StepKind,
    base: f64,
    budget: Budget,
    bound_mode: bool,
}

impl StepSchedule {
    pub fn new(kind: StepKind, base: f64, budget: Budget) -> Result<Self> {
        if !(base > 0.0) || !base.is_finite() {
            return Err(Error::Schedule(format!(
                "base step must be positive and finite, got {base}"
            )));
        }
        Ok(Self {
            kind,
            base,
            budget,
            bound_mode: false,
        })
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn is_bound_mode(&self) -> bool {
        self.bound_mode
    }

    pub fn iterations(&self, k: usize) -> usize {
        self.budget.at(k)
    }

    /// Step size for iteration `i` at time `k >= 1`.
    pub fn eta(&self, k: usize, _i: usize) -> f64 {
        match self.kind {
            StepKind::Constant => self.base,
            StepKind::InverseSqrt => self.base / (k.max(1) as f64).sqrt(),
        }
    }

    /// `sum_i eta_k^i` over the iterations run at time `k`.
    pub fn step_sum(&self, k: usize) -> f64 {
        (0..self.iterations(k)).map(|i| self.eta(k, i)).sum()
    }

    pub fn step_sq_sum(&self, k: usize) -> f64 {
        (0..self.iterations(k)).map(|i| self.eta(k, i).powi(2)).sum()
    }
}

/// Schedule with base step `sigma / L_f`. In bound mode the iteration
/// budget must be non-increasing so the per-time step sums are too.
pub fn make_schedule(
    cert: &StabilityCertificate,
    kind: StepKind,
    budget: Budget,
    bound_mode: bool,
) -> Result<StepSchedule> {
    if !cert.valid {
        return Err(Error::Schedule("certificate is not valid".into()));
    }
    if !(cert.lf > 0.0) {
        return Err(Error::Schedule(
            "smoothness constant is zero; no finite step bound".into(),
        ));
    }
    if bound_mode && !budget.is_non_increasing() {
        return Err(Error::Schedule(
            "iteration budget must be non-increasing when regret bounds are requested".into(),
        ));
    }
    let mut s = StepSchedule::new(kind, cert.step_bound(), budget)?;
    s.bound_mode = bound_mode;
    Ok(s)
}
