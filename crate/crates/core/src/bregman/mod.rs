//! Quadratic Bregman geometry, projections and mirror steps.

mod geometry;
pub mod qp;

pub use geometry::BregmanGeometry;
pub use qp::QpWorkspace;
