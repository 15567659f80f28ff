use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, FactorSpec, Potentials, StructureColumn};

/// Stopping rules shared by the active-set and conditional-gradient solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iter: usize,
    /// Optimality tolerance on the (adjusted) MAP gap.
    pub gap_tol: f64,
    /// Tolerance of the active-set test `y_hat == y`.
    pub y_equal_tol: f64,
    /// Support weights below this are treated as zero in the returned solution.
    pub drop_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iter: 100,
            gap_tol: 1e-9,
            y_equal_tol: 1e-9,
            drop_tol: 1e-12,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidSettings("max_iter must be at least 1".into()));
        }
        for (name, value) in [
            ("gap_tol", self.gap_tol),
            ("y_equal_tol", self.y_equal_tol),
            ("drop_tol", self.drop_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidSettings(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
}

/// Objective value and support size after one solver iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iteration: usize,
    pub objective: f64,
    pub support_size: usize,
    /// Nanoseconds since the solver started.
    pub elapsed_ns: u64,
}

/// A sparse point of the marginal polytope: `[u; v] = sum_s w_s [m_s; n_s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Unary posteriors `u`.
    pub u: Vec<f64>,
    /// Factor posteriors `v`.
    pub v: Vec<f64>,
    /// Structures with strictly positive weight.
    pub support: Vec<(StructureColumn, f64)>,
    /// `eta_U^T u + eta_F^T v - 1/2 ||u||^2`.
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Candidate columns rejected as linearly dependent on the support. When
    /// nonzero the solver stopped at the last iterate before the rejection.
    pub degenerate_rejections: usize,
    /// One record per iteration, starting with the initial vertex.
    pub trace: Vec<IterateRecord>,
}

impl SparseSolution {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.support.iter().map(|(_, w)| *w).collect()
    }
}

/// `eta_U^T u + eta_F^T v - penalty/2 ||u||^2`.
pub fn sparsemap_objective(pot: &Potentials, u: &[f64], v: &[f64], penalty: f64) -> f64 {
    pot.dot(u, v) - 0.5 * penalty * dot(u, u)
}

/// `(M y, N y)` for a weighted list of structures.
pub fn combine_support<'a>(
    spec: &FactorSpec,
    support: impl IntoIterator<Item = (&'a StructureColumn, f64)>,
) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; spec.unary_dim()];
    let mut v = vec![0.0; spec.factor_dim()];
    for (col, w) in support {
        col.add_unary_to(&mut u, w);
        col.add_factor_to(&mut v, w);
    }
    (u, v)
}
