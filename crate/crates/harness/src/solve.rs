//! Batch solving and per-instance JSON reports.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use sparsemap::{
    sparsemap_active_set, sparsemap_cg, CgVariant, FactorSpec, Potentials, SolveStatus,
    SolverSettings, SparseSolution, StructureId,
};

use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    ActiveSet,
    Cg(CgVariant),
}

impl SolverChoice {
    pub const ALL: [SolverChoice; 4] = [
        SolverChoice::ActiveSet,
        SolverChoice::Cg(CgVariant::Vanilla),
        SolverChoice::Cg(CgVariant::Pairwise),
        SolverChoice::Cg(CgVariant::AwayStep),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::ActiveSet => "activeset",
            SolverChoice::Cg(v) => v.name(),
        }
    }

    pub fn run(&self, spec: &FactorSpec, pot: &Potentials, settings: &SolverSettings) -> sparsemap::Result<SparseSolution> {
        match self {
            SolverChoice::ActiveSet => sparsemap_active_set(spec, pot, settings).map(|out| out.solution),
            SolverChoice::Cg(v) => sparsemap_cg(spec, pot, *v, settings),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverChoice::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}` (expected activeset, cg-vanilla, cg-pairwise or cg-away)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEntry {
    pub id: StructureId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub index: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub support: Vec<SupportEntry>,
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn new(index: usize, sol: SparseSolution) -> Self {
        SolveReport {
            index,
            support: sol
                .support
                .into_iter()
                .map(|(col, weight)| SupportEntry {
                    id: col.id().clone(),
                    weight,
                })
                .collect(),
            u: sol.u,
            v: sol.v,
            objective: sol.objective,
            iterations: sol.iterations,
            status: sol.status,
        }
    }
}

/// Solves every instance (concurrently), returning reports in input order.
pub fn solve_batch(
    instances: &[Instance],
    solver: SolverChoice,
    settings: &SolverSettings,
) -> Result<Vec<SolveReport>, String> {
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            solver
                .run(&inst.spec, &inst.potentials, settings)
                .map(|sol| SolveReport::new(i, sol))
                .map_err(|e| format!("instance {i}: {e}"))
        })
        .collect()
}
