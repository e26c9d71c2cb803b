//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use stocp_core::assembly::{assemble_mass, assemble_spacetime_stiffness, assemble_wave};
use stocp_core::{DofSpace, Mesh, Result, SpaceKind, SparseMatrix};

/// Matrices of one uniform level.
pub struct Fixture {
    pub state: Arc<DofSpace>,
    pub adjoint: Arc<DofSpace>,
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub wave: SparseMatrix,
}

impl Fixture {
    pub fn new(d: usize, level: usize) -> Result<Self> {
        let mesh = Arc::new(Mesh::uniform_level(d, level)?);
        let state = DofSpace::new(mesh.clone(), SpaceKind::StateY)?;
        let adjoint = DofSpace::new(mesh, SpaceKind::AdjointP)?;
        Ok(Fixture {
            mass: assemble_mass(&state, None, false)?,
            stiffness: assemble_spacetime_stiffness(&adjoint, None)?,
            wave: assemble_wave(&state, &adjoint)?,
            state,
            adjoint,
        })
    }
}

/// Deterministic test vector.
pub fn test_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5).collect()
}
