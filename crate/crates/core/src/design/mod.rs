//! Offline synthesis of the observer gain, Bregman weight, smoothness
//! constant and step sizes, bundled into a stability certificate.

mod certificate;
mod gain;
mod lmi;
mod schedule;
mod smoothness;

pub use certificate::{certify, StabilityCertificate};
pub use gain::place_gain;
pub use lmi::solve_lmi;
pub use schedule::{make_schedule, Budget, StepKind, StepSchedule};
pub use smoothness::{horizon_problem, smoothness_constant, SmoothnessMode};
