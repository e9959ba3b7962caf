//! Loss accounting against comparator sequences and the regret bounds.

mod bounds;
mod comparator;
mod report;

pub use bounds::{
    bound_theorem2, bound_theorem3, bound_theorem4, empirical_constants, EmpiricalConstants,
};
pub use comparator::{comparator_variation, fit_ges, transition, ComparatorKind, ComparatorSequence};
pub use report::{regret, rmse, RegretReport};
