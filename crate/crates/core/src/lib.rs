//! Anytime proximity moving horizon estimation for constrained linear
//! systems.
//!
//! The estimator warm-starts a few mirror-descent steps on the window loss
//! with a Luenberger-style a priori estimate; the [`design`] module produces
//! the weights and step sizes that keep the error exponentially stable after
//! any number of inner iterations, and [`regret`] measures how far the
//! resulting losses fall behind a comparator sequence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod design;
pub mod error;
pub mod linalg;
pub mod model;
pub mod reactor;
pub mod regret;
pub mod simulation;
pub mod solver;

pub use bregman::{BregmanGeometry, QpWorkspace};
pub use design::{
    certify, make_schedule, place_gain, smoothness_constant, solve_lmi, Budget, SmoothnessMode,
    StabilityCertificate, StepKind, StepSchedule,
};
pub use error::{Error, Result};
pub use model::{
    build_condensed, build_polytope, CondensedProblem, Layout, LtiSystem, MeasurementWindow,
    PolytopeSet, ResidualMode, StackedVector, StageWeights, StateConstraints,
};
pub use regret::{ComparatorSequence, RegretReport};
pub use simulation::{Scenario, Simulation, StepContext};
pub use solver::{
    AnytimePmhe, EstimateTrace, Estimator, Gmhe, JSelect, LuenbergerObserver, OptimalPmhe,
    StepRecord,
};
