//! Structured bilinear finite elements on the periodicity cell and on the rod.

mod assembly;
mod grid;
mod sparse;

pub use assembly::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, integrate, quad_points,
    QuadPoint, Restriction,
};
pub use grid::{CellGrid, Element, QuadMesh, RodGrid, MAX_ASPECT_RATIO};
pub use sparse::{dot, SparseSym};
