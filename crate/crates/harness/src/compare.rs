//! Side-by-side solver runs on shared random instances.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use sparsemap::{FactorSpec, SolverSettings};

use crate::sampling::{item_rng, random_potentials};
use crate::solve::SolverChoice;

pub const CSV_HEADER: [&str; 6] = ["solver", "instance", "iteration", "objective", "support_size", "wall_time_ns"];

/// One solver iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub solver: String,
    pub instance: usize,
    pub iteration: usize,
    pub objective: f64,
    pub support_size: usize,
    /// Time since the solver started; zero unless timing was requested.
    pub wall_time_ns: u64,
}

/// Runs every solver on `n_instances` standard-normal instances of `spec`.
/// Rows are ordered by instance, then solver, then iteration.
pub fn compare_solvers(
    spec: &FactorSpec,
    n_instances: usize,
    seed: u64,
    settings: &SolverSettings,
    timing: bool,
) -> sparsemap::Result<Vec<BenchmarkRow>> {
    let per_instance: Vec<Vec<BenchmarkRow>> = (0..n_instances)
        .into_par_iter()
        .map(|index| {
            let pot = random_potentials(spec, &mut item_rng(seed, index as u64), 1.0);
            let mut rows = Vec::new();
            for solver in SolverChoice::ALL {
                let sol = solver.run(spec, &pot, settings)?;
                rows.extend(sol.trace.iter().map(|rec| BenchmarkRow {
                    solver: solver.name().to_string(),
                    instance: index,
                    iteration: rec.iteration,
                    objective: rec.objective,
                    support_size: rec.support_size,
                    wall_time_ns: if timing { rec.elapsed_ns } else { 0 },
                }));
            }
            Ok(rows)
        })
        .collect::<sparsemap::Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

/// Writes `rows` as CSV with a header line (also when `rows` is empty).
pub fn write_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Summary of one solver's run on one instance, as read off the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub solver: String,
    pub instance: usize,
    pub final_objective: f64,
    pub final_support: usize,
    pub iterations: usize,
}

pub fn summarize(rows: &[BenchmarkRow]) -> Vec<RunSummary> {
    let mut out: Vec<RunSummary> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some(last) if last.solver == row.solver && last.instance == row.instance => {
                last.final_objective = row.objective;
                last.final_support = row.support_size;
                last.iterations = row.iteration;
            }
            _ => out.push(RunSummary {
                solver: row.solver.clone(),
                instance: row.instance,
                final_objective: row.objective,
                final_support: row.support_size,
                iterations: row.iteration,
            }),
        }
    }
    out
}

/// First iteration at which `solver` gets within `tol` of `target` on
/// `instance`, if ever.
pub fn iterations_to_reach(rows: &[BenchmarkRow], solver: &str, instance: usize, target: f64, tol: f64) -> Option<usize> {
    rows.iter()
        .filter(|r| r.solver == solver && r.instance == instance)
        .find(|r| r.objective >= target - tol)
        .map(|r| r.iteration)
}
