//! Timoshenko frame model: element matrices, global assembly and
//! prescribed-displacement solves.

mod assembly;
mod element;
mod solve;

pub use assembly::{assemble, assemble_with, AssemblyOptions, Element, LinearSystem, DOF_PER_NODE};
pub use element::{element_stiffness, local_stiffness, ElementMatrix, MIN_ELEMENT_LENGTH};
pub use solve::{
    affine_values, apply_affine_bc, apply_mirror_bc, boundary_dofs, mirror_dofs, mirror_values, solve,
    ConstrainedSystem, FactoredSystem, MirrorLoading, Solution, RESIDUAL_TOLERANCE,
};

use crate::meshbuild::BeamMesh;

/// Strain energy per unit volume of the bounding box (N mm / mm^3 = MPa).
pub fn strain_energy_density(sol: &Solution, mesh: &BeamMesh) -> f64 {
    sol.energy / (mesh.bbox.area() * mesh.depth)
}
