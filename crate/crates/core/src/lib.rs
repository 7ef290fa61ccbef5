//! Lowest-order hybrid discretization of the variable-density incompressible
//! Navier-Stokes equations on general polygonal meshes.

pub mod assembly;
pub mod convection;
pub mod geometry;
pub mod io;
pub mod operators;
pub mod sparse;
pub mod timestepper;
pub mod verify;
pub mod spaces;
pub mod mesh;

pub use geometry::{Mat2, Rect, Vec2};
pub use mesh::{Mesh, MeshError, RegularityReport};
pub use spaces::{CellField, HybridVelocity};
pub use operators::LocalOperators;
pub use sparse::SparseMatrix;
pub use assembly::{DirectSolver, DofLayout, SolveError, SparseSystem};
pub use timestepper::{BoundaryMode, CaseData, EnergyLedger, Simulation, SimulationError, SimulationState, TimeConfig};
pub use verify::{BoundaryChoice, ManufacturedCase};
