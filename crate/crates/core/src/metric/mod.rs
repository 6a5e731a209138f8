//! Finite metric and ultrametric spaces: representation, axiom checks, scale
//! components, isometry oracles and integral ultrametrization.

mod components;
mod isometry;
mod space;
pub(crate) mod union_find;
mod ultrametrize;
mod validate;

pub use components::{asdim0_witness, distance_set, r_components};
pub(crate) use isometry::check_pairs;
pub use isometry::{
    find_isometric_embedding, verify_isometric_embedding, DistanceMismatch, IsometryReport,
    SearchLimits,
};
pub use space::{DistanceSet, MetricSpace, Partition, UltrametricSpace};
pub use ultrametrize::ultrametrize;
pub use validate::{validate_ultrametric, AxiomReport, AxiomViolation};
