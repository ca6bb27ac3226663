//! Spectral analysis of the Dirichlet Laplacian on a rectangle with an
//! attached thin tube: meshing, P1 finite elements, a sparse eigensolver
//! and nodal-line analysis of the second eigenfunction.

pub mod cholesky;
pub mod eigensolve;
pub mod experiments;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod nodal;
pub mod render;
pub mod sparse;

pub use eigensolve::{smallest_eigenpairs, EigenError, EigenResult, SolverOptions};
pub use fem::{CutBc, Parity, Sector, SectorSystem};
pub use geometry::{DomainSpec, Profile, ProfileKind};
pub use mesh::{generate_mesh, validate, Mesh};
