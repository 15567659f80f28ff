//! Sparse, differentiable structured inference.
//!
//! SparseMAP returns the solution of
//!
//! ```text
//!     maximize  eta_U^T u + eta_F^T v - 1/2 ||u||^2   over [u; v] in the marginal polytope
//! ```
//!
//! as an explicit, sparse convex combination of structures, using nothing but
//! a MAP oracle for the structure family. This crate provides:
//!
//! * structure encodings for dense, sequence, arborescence and matching
//!   families ([`model`]) and their MAP oracles ([`oracles`]);
//! * the active-set solver ([`activeset`]) and conditional-gradient baselines
//!   ([`cg`]);
//! * Jacobian-vector products through the solution map ([`backward`]);
//! * exact marginals where tractable ([`marginals`]);
//! * the structured Fenchel-Young loss family ([`losses`]).
//!
//! ```
//! use sparsemap::{sparsemap_active_set, FactorSpec, Potentials, SolverSettings};
//!
//! let spec = FactorSpec::dense(3).unwrap();
//! let pot = Potentials::new(&spec, vec![1.0, 0.5, -1.0], vec![]).unwrap();
//! let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
//! assert!((out.solution.u[0] - 0.75).abs() < 1e-12);
//! assert_eq!(out.solution.support.len(), 2);
//! ```

pub mod activeset;
pub mod backward;
pub mod cg;
pub mod error;
pub mod gram;
pub mod losses;
pub mod marginals;
pub mod model;
pub mod oracles;
pub mod solution;

pub use activeset::{
    activeset_line_search, solve_restricted_kkt, sparsemap_active_set,
    sparsemap_active_set_with_penalty, ActiveSetSolution, ActiveSetState,
};
pub use backward::{sparsemap_jvp, JacobianContext};
pub use cg::{cg_line_search, sparsemap_cg, wolfe_gap, CgVariant};
pub use error::{Error, Result};
pub use losses::{
    check_scaling_property, fy_loss, fy_loss_scaled, hamming_cost_vector, HammingCost, Loss,
    LossKind, LossResult,
};
pub use marginals::{marginals, MarginalResult};
pub use model::{
    decode_structure, enumerate_structures, enumerate_structures_capped, score_structure,
    structure_column, FactorSpec, Kind, Potentials, StructureColumn, StructureId,
};
pub use oracles::{map_oracle, MapResult};
pub use solution::{sparsemap_objective, IterateRecord, SolveStatus, SolverSettings, SparseSolution};
