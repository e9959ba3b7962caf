//! Plant model, measurement window and the condensed window problem.

mod condensed;
mod polytope;
mod stacked;
mod system;
mod window;

pub use condensed::{build_condensed, CondensedProblem, StageWeights};
pub use polytope::{build_polytope, PolytopeSet, StateConstraints};
pub use stacked::{Layout, ResidualMode, StackedVector};
pub use system::LtiSystem;
pub use window::MeasurementWindow;
