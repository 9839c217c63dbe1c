//! Problem class: species, mesh, boundary conditions, reaction catalog,
//! driver flow and delay-history segments.

mod boundary;
mod driver;
mod mesh;
mod problem;
pub mod reaction;
mod segment;

pub use boundary::{BoundaryKind, BoundarySpec};
pub use driver::{circle_distance, reduce_angle, DriverState};
pub use mesh::Mesh1D;
pub use problem::{ProblemSpec, DIRICHLET_TOL};
pub use reaction::{
    eval_jacobians, eval_reaction, CatalogId, CoefMatrix, Coefficient, CustomReaction, FourierTerm,
    ReactionTerm,
};
pub use segment::{segment_compare, segment_norm, Segment, SegmentOrder};

/// `DriverState::advance`, under the operation name used in reports.
pub fn advance_driver(w: &DriverState, t: f64) -> DriverState {
    w.advance(t)
}
