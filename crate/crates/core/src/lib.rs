//! Space-time finite elements and robust iterative solvers for tracking-type
//! optimal control of the wave equation.
//!
//! The crate covers the full pipeline: simplicial space-time meshes with
//! uniform and adaptive refinement, piecewise-linear spaces with the state and
//! adjoint boundary masks, matrix assembly, the saddle-point solvers (Schur
//! complement PCG, Bramble-Pasciak PCG, block-preconditioned GMRES), a classical
//! Ruge-Stüben AMG, and the experiment drivers used by the `stocp` binary.

pub mod amg;
pub mod assembly;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod fespace;
pub mod geometry;
pub mod io;
pub mod krylov;
pub mod mesh;
pub mod ocp;
pub mod quadrature;
pub mod sparse;
pub mod targets;

pub use amg::{AmgConfig, AmgHierarchy};
pub use error::{Error, Result};
pub use fespace::{DofSpace, NodalField, SpaceKind};
pub use krylov::{LinearOperator, SolveStats, StopReason};
pub use mesh::{BoundaryTag, Element, Mesh, Vertex};
pub use ocp::{InnerSolve, OcpProblem, Regularization, RhoStrategy, SolveResult, SolverKind};
pub use sparse::SparseMatrix;
pub use targets::{SmoothnessClass, TargetField, TargetId};
