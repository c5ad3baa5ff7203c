//! Mean and variance of a linear quantity of interest for an elliptic PDE
//! posed on a randomly deformed unit square.
//!
//! The random domain is pulled back to the fixed reference square through a
//! stochastic map. The leading (large-deviation) parameters are handled by
//! Smolyak sparse-grid collocation, the remaining tail parameters by a
//! first-order perturbation correction built from the adjoint (influence)
//! solution.
//!
//! Module map:
//!
//! - [`geometry`]: the deformation map, its Jacobian, the pulled-back
//!   diffusion tensor and its tail-direction derivatives.
//! - [`fem`]: P1 finite elements on a uniform triangulation, primal and
//!   adjoint solves, QoI evaluation.
//! - [`sparse_grid`]: Clenshaw–Curtis Smolyak grids via the combination
//!   technique.
//! - [`perturbation`]: tail sensitivities and the hybrid / collocation
//!   estimators.
//! - [`oracle`]: Monte Carlo and high-level collocation references, finite
//!   difference checkers.
//! - [`harness`]: the config-driven experiment runner behind the `uq` binary.
//!
//! ```
//! use hybrid_uq::perturbation::run_hybrid;
//! use hybrid_uq::{DeformationSpec, FemModel, HybridOptions};
//!
//! let model = FemModel::experiment(17, DeformationSpec::experiment(2)?)?;
//! let q0 = model.nominal_qoi()?;
//! let r = run_hybrid(&model, HybridOptions::new(2))?.normalized(q0);
//! assert!(r.variance > r.correction_var && r.correction_var > 0.0);
//! # Ok::<(), hybrid_uq::UqError>(())
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod mat2;
pub mod oracle;
pub mod perturbation;
pub mod sparse_grid;

pub use error::{Result, UqError};
pub use fem::{FemModel, FemSolution, PdeData, QoISpec, SolutionKind, SolverOptions, TriMesh};
pub use geometry::{DeformationSpec, JacobianData, ParamPoint, Region};
pub use perturbation::{EstimatorReport, HybridOptions, Method, TailSensitivity};
pub use sparse_grid::{IndexRule, SparseGrid};

/// Half-width of the uniform parameter support `(-√3, √3)`.
pub const SUPPORT_HALF_WIDTH: f64 = 1.732_050_807_568_877_2;
