//! P1 finite elements for the pulled-back problem on the unit square.
//!
//! For a parameter point `y` the primal unknown `û = u∘F - ŵ` solves
//!
//! ```text
//! ∫_U ∇ûᵀ G(y) ∇v = ∫_U (f∘F)|∂F| v - ∫_U ∇ŵᵀ G(y) ∇v     for all v ∈ H¹₀(U)
//! ```
//!
//! with the lifting `ŵ` of the Dirichlet data, and the adjoint (influence
//! function) `φ` solves `∫_U ∇vᵀ G ∇φ = Q(v)`.

mod mesh;
mod model;
mod multigrid;
mod qoi;
mod solver;

pub use mesh::{BoundaryTag, TriMesh};
pub use model::{
    Element, FemModel, FemSolution, Forcing, LinearSystem, PdeData, SolutionKind, QUAD_BASIS,
};
pub use multigrid::Multigrid;
pub use qoi::{bump, QoISpec};
pub use solver::{
    conjugate_gradient, preconditioned_cg, CgStats, CsrMatrix, Preconditioner, SolverOptions,
};
