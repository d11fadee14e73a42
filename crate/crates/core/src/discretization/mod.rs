//! Flux-form finite differences for the 1D p-Laplacian with zero boundary
//! values on possibly graded meshes.

mod grid;
mod mesh;
mod operator;
mod source;

pub use grid::GridFunction;
pub use mesh::{Grading, Mesh1D, MeshParams, MIN_INTERIOR};
pub use operator::{
    assemble_jacobian, assemble_residual, integrate_flux, p_laplacian_apply, residual_measure,
    weak_jacobian, weak_residual, PLaplacian, DEFAULT_ETA,
};
pub use source::{FixedRhs, FrozenSource, Reaction, SingularOnly, Source};
