//! Active-set solver for the SparseMAP quadratic program
//!
//! ```text
//!     maximize   theta^T y - penalty/2 ||M y||^2   over y in the simplex
//! ```
//!
//! Each iteration solves the equality-constrained QP restricted to the current
//! support (non-negativity relaxed), then either moves toward its solution
//! until a weight hits zero, or, once the restricted solution is feasible,
//! asks the MAP oracle for the best structure under the adjusted scores
//! `eta_U - penalty * u`. The run stops when no structure beats the KKT
//! multiplier `tau`.

use std::time::Instant;

use crate::backward::JacobianContext;
use crate::error::{Error, Result};
use crate::gram::GramFactor;
use crate::model::{FactorSpec, Potentials, StructureColumn};
use crate::oracles::map_oracle;
use crate::solution::{
    combine_support, sparsemap_objective, IterateRecord, SolveStatus, SolverSettings,
    SparseSolution,
};

/// Solver-internal support, weights and Gram factor.
#[derive(Debug, Clone)]
pub struct ActiveSetState {
    support: Vec<StructureColumn>,
    y: Vec<f64>,
    tau: f64,
    gram: GramFactor,
}

impl ActiveSetState {
    /// State supported on `columns` with weights `y`.
    pub fn new(columns: Vec<StructureColumn>, y: Vec<f64>, penalty: f64) -> Result<Self> {
        assert_eq!(columns.len(), y.len(), "one weight per support column");
        let gram = GramFactor::from_columns(&columns, penalty)
            .map_err(|index| Error::DegenerateSupport { index })?;
        Ok(ActiveSetState {
            support: columns,
            y,
            tau: f64::NAN,
            gram,
        })
    }

    pub fn support(&self) -> &[StructureColumn] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.y
    }

    /// Multiplier of the last restricted solve (NaN before the first).
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gram_factor(&self) -> &GramFactor {
        &self.gram
    }

    fn remove(&mut self, index: usize) {
        self.support.remove(index);
        self.y.remove(index);
        self.gram.remove(index);
    }
}

/// Solves the restricted KKT system
///
/// ```text
///     [ G    1 ] [ y   ]   [ theta_I ]
///     [ 1^T  0 ] [ tau ] = [ 1       ]
/// ```
///
/// with `G = penalty * M_I^T M_I`. The returned `y_hat` may have negative
/// entries.
pub fn solve_restricted_kkt(state: &ActiveSetState, theta_i: &[f64]) -> Result<(Vec<f64>, f64)> {
    if theta_i.len() != state.support.len() {
        return Err(Error::DimensionMismatch {
            what: "support scores",
            expected: state.support.len(),
            got: theta_i.len(),
        });
    }
    Ok(kkt_with_factor(&state.gram, theta_i))
}

fn kkt_with_factor(gram: &GramFactor, theta_i: &[f64]) -> (Vec<f64>, f64) {
    let z_theta = gram.solve(theta_i);
    let z_one = gram.solve(&vec![1.0; theta_i.len()]);
    let tau = (z_theta.iter().sum::<f64>() - 1.0) / z_one.iter().sum::<f64>();
    let y_hat = z_theta.iter().zip(&z_one).map(|(a, b)| a - tau * b).collect();
    (y_hat, tau)
}

/// Largest feasible step from `y_current` toward `y_hat`, and the support
/// index zeroed by it when the step is shorter than 1 (ties: lowest index).
pub fn activeset_line_search(y_current: &[f64], y_hat: &[f64]) -> (f64, Option<usize>) {
    let mut gamma = 1.0;
    let mut dropped = None;
    for (s, (&y, &yh)) in y_current.iter().zip(y_hat).enumerate() {
        if y > yh {
            let ratio = y / (y - yh);
            if ratio < gamma {
                gamma = ratio;
                dropped = Some(s);
            }
        }
    }
    (gamma, dropped)
}

/// Result of an active-set solve: the solution and the support factorization
/// needed for backpropagation.
#[derive(Debug, Clone)]
pub struct ActiveSetSolution {
    pub solution: SparseSolution,
    pub jacobian: JacobianContext,
    /// KKT multiplier of the final support.
    pub tau: f64,
}

/// SparseMAP with the standard `1/2 ||u||^2` penalty.
pub fn sparsemap_active_set(
    spec: &FactorSpec,
    pot: &Potentials,
    settings: &SolverSettings,
) -> Result<ActiveSetSolution> {
    sparsemap_active_set_with_penalty(spec, pot, 1.0, settings)
}

/// SparseMAP with a `penalty/2 ||u||^2` regularizer, `penalty > 0`.
pub fn sparsemap_active_set_with_penalty(
    spec: &FactorSpec,
    pot: &Potentials,
    penalty: f64,
    settings: &SolverSettings,
) -> Result<ActiveSetSolution> {
    settings.validate()?;
    pot.check(spec)?;
    if !(penalty > 0.0 && penalty.is_finite()) {
        return Err(Error::InvalidSettings(format!(
            "penalty must be positive, got {penalty}"
        )));
    }

    let first = map_oracle(spec, pot)?;
    let mut theta = vec![first.score];
    let mut state = ActiveSetState::new(vec![first.column], vec![1.0], penalty)?;
    let objective_of = |state: &ActiveSetState| {
        let (u, v) = combine_support(spec, state.support.iter().zip(state.y.iter().copied()));
        sparsemap_objective(pot, &u, &v, penalty)
    };
    let clock = Instant::now();
    let mut trace = vec![IterateRecord {
        iteration: 0,
        objective: objective_of(&state),
        support_size: 1,
        elapsed_ns: clock.elapsed().as_nanos() as u64,
    }];
    let mut status = SolveStatus::MaxIter;
    let mut degenerate_rejections = 0;
    let mut iterations = 0;

    'outer: for iter in 1..=settings.max_iter {
        iterations = iter;
        let (y_hat, tau) = kkt_with_factor(&state.gram, &theta);
        state.tau = tau;
        let stationary = y_hat
            .iter()
            .zip(&state.y)
            .all(|(a, b)| (a - b).abs() <= settings.y_equal_tol);

        if stationary {
            state.y = y_hat;
            let (u_hat, _) =
                combine_support(spec, state.support.iter().zip(state.y.iter().copied()));
            let candidate = map_oracle(spec, &pot.adjusted_scaled(&u_hat, penalty))?;
            if candidate.score <= tau + settings.gap_tol
                || state.support.contains(&candidate.column)
            {
                status = SolveStatus::Converged;
                trace.push(IterateRecord {
                    iteration: iter,
                    objective: objective_of(&state),
                    support_size: state.support.len(),
                    elapsed_ns: clock.elapsed().as_nanos() as u64,
                });
                break 'outer;
            }
            let column = candidate.column;
            let score = column.score(pot);
            match state.gram.push(&state.support, &column) {
                Ok(()) => {
                    state.support.push(column);
                    state.y.push(0.0);
                    theta.push(score);
                }
                Err(dep) => {
                    // m_new = M_I c with sum(c) = 1: trade weight along the
                    // direction that keeps u fixed until a support weight
                    // vanishes, then swap the new column in.
                    let c = dep.coefficients;
                    let affine = !c.is_empty() && (c.iter().sum::<f64>() - 1.0).abs() < 1e-6;
                    let exit = affine.then(|| exchange_ratio(&state.y, &c)).flatten();
                    let Some((step, leaving)) = exit else {
                        degenerate_rejections += 1;
                        status = SolveStatus::Converged;
                        break 'outer;
                    };
                    for (y, ci) in state.y.iter_mut().zip(&c) {
                        *y -= step * ci;
                    }
                    state.remove(leaving);
                    theta.remove(leaving);
                    if state.gram.push(&state.support, &column).is_err() {
                        degenerate_rejections += 1;
                        status = SolveStatus::Converged;
                        // weights no longer sum to one without the new column
                        let total: f64 = state.y.iter().sum();
                        state.y.iter_mut().for_each(|y| *y /= total);
                        break 'outer;
                    }
                    state.support.push(column);
                    state.y.push(step);
                    theta.push(score);
                }
            }
        } else {
            let (gamma, dropped) = activeset_line_search(&state.y, &y_hat);
            for (y, yh) in state.y.iter_mut().zip(&y_hat) {
                *y = (1.0 - gamma) * *y + gamma * yh;
            }
            if let Some(r) = dropped {
                state.remove(r);
                theta.remove(r);
            }
        }
        trace.push(IterateRecord {
            iteration: iter,
            objective: objective_of(&state),
            support_size: state.support.len(),
            elapsed_ns: clock.elapsed().as_nanos() as u64,
        });
    }

    // drop numerically-zero weights and renormalize
    let mut i = 0;
    let mut removed = false;
    while i < state.y.len() {
        if state.y[i] < settings.drop_tol && state.y.len() > 1 {
            state.support.remove(i);
            state.y.remove(i);
            theta.remove(i);
            removed = true;
        } else {
            i += 1;
        }
    }
    if removed {
        state.gram = GramFactor::from_columns(&state.support, penalty)
            .expect("subset of an independent support is independent");
    }
    for y in state.y.iter_mut() {
        *y = y.max(0.0);
    }
    let total: f64 = state.y.iter().sum();
    state.y.iter_mut().for_each(|y| *y /= total);

    let (u, v) = combine_support(spec, state.support.iter().zip(state.y.iter().copied()));
    let objective = sparsemap_objective(pot, &u, &v, penalty);
    let tau = kkt_with_factor(&state.gram, &theta).1;
    let jacobian = JacobianContext::new(spec, state.support.clone(), state.gram.clone());
    let support = state.support.into_iter().zip(state.y).collect();

    Ok(ActiveSetSolution {
        solution: SparseSolution {
            u,
            v,
            support,
            objective,
            status,
            iterations,
            degenerate_rejections,
            trace,
        },
        jacobian,
        tau,
    })
}

/// Ratio test along `-c`: step `t` and the index whose weight `y_i - t c_i`
/// reaches zero first (ties: lowest index).
fn exchange_ratio(y: &[f64], c: &[f64]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, (&yi, &ci)) in y.iter().zip(c).enumerate() {
        if ci > 1e-12 {
            let t = yi / ci;
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_structures, structure_column, StructureId};

    fn dense(eta: &[f64]) -> (FactorSpec, Potentials) {
        let spec = FactorSpec::dense(eta.len()).unwrap();
        let pot = Potentials::new(&spec, eta.to_vec(), vec![]).unwrap();
        (spec, pot)
    }

    #[test]
    fn single_column_kkt_is_closed_form() {
        let spec = FactorSpec::sequence(3, 2).unwrap();
        let col = structure_column(&spec, &StructureId::Sequence(vec![1, 0, 1])).unwrap();
        let state = ActiveSetState::new(vec![col], vec![1.0], 1.0).unwrap();
        let (y, tau) = solve_restricted_kkt(&state, &[2.5]).unwrap();
        assert_eq!(y, vec![1.0]);
        assert!((tau - (2.5 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn dense_kkt_is_sparsemax_threshold() {
        let (spec, _) = dense(&[0.0; 4]);
        let cols: Vec<_> = enumerate_structures(&spec).unwrap().into_iter().take(3).collect();
        let state = ActiveSetState::new(cols, vec![1.0 / 3.0; 3], 1.0).unwrap();
        let theta = [1.0, 0.4, -0.2];
        let (y, tau) = solve_restricted_kkt(&state, &theta).unwrap();
        let expected_tau = (theta.iter().sum::<f64>() - 1.0) / 3.0;
        assert!((tau - expected_tau).abs() < 1e-14);
        for (yi, th) in y.iter().zip(theta) {
            assert!((yi - (th - expected_tau)).abs() < 1e-14);
        }
        assert!(solve_restricted_kkt(&state, &[1.0]).is_err());
    }

    #[test]
    fn degenerate_support_is_reported() {
        let spec = FactorSpec::sequence(2, 2).unwrap();
        let cols = enumerate_structures(&spec).unwrap();
        let err = ActiveSetState::new(cols, vec![0.25; 4], 1.0).unwrap_err();
        assert_eq!(err, Error::DegenerateSupport { index: 3 });
    }

    #[test]
    fn line_search_examples() {
        assert_eq!(activeset_line_search(&[0.5, 0.5], &[0.7, 0.3]), (1.0, None));
        assert_eq!(activeset_line_search(&[0.5, 0.5], &[1.5, -0.5]), (0.5, Some(1)));
        assert_eq!(activeset_line_search(&[1.0], &[1.0]), (1.0, None));
        // ties prefer the lowest index
        let (g, d) = activeset_line_search(&[0.25, 0.25, 0.5], &[-0.25, -0.25, 1.5]);
        assert!((g - 0.5).abs() < 1e-15);
        assert_eq!(d, Some(0));
    }

    #[test]
    fn dense_example_solution() {
        let (spec, pot) = dense(&[1.0, 0.5, -1.0]);
        let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
        let sol = out.solution;
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.u[0] - 0.75).abs() < 1e-12);
        assert!((sol.u[1] - 0.25).abs() < 1e-12);
        assert_eq!(sol.u[2], 0.0);
        let ids: Vec<_> = sol.support.iter().map(|(c, _)| c.id().clone()).collect();
        assert_eq!(ids, vec![StructureId::Dense(0), StructureId::Dense(1)]);
        assert!((sol.weights()[0] - 0.75).abs() < 1e-12);
        // tau = (1.0 + 0.5 - 1) / 2
        assert!((out.tau - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dominant_structure_gives_vertex() {
        let spec = FactorSpec::arborescence(3).unwrap();
        let heads = vec![0, 1, 1];
        let mut unary = vec![0.0; 9];
        for (i, &h) in heads.iter().enumerate() {
            unary[spec.arc_index(h, i + 1).unwrap()] = 10.0;
        }
        let pot = Potentials::new(&spec, unary.clone(), vec![]).unwrap();
        let sol = sparsemap_active_set(&spec, &pot, &SolverSettings::default())
            .unwrap()
            .solution;
        assert_eq!(sol.support.len(), 1);
        assert_eq!(sol.support[0].0.id(), &StructureId::Arborescence(heads));
        assert_eq!(sol.weights(), vec![1.0]);
        assert_eq!(sol.u, unary.iter().map(|&x| x / 10.0).collect::<Vec<_>>());
    }

    #[test]
    fn objective_trace_is_monotone() {
        let spec = FactorSpec::sequence(4, 3).unwrap();
        let unary: Vec<f64> = (0..12).map(|i| ((i * 7919) % 13) as f64 / 6.0 - 1.0).collect();
        let factor: Vec<f64> = (0..spec.factor_dim())
            .map(|i| ((i * 104729) % 11) as f64 / 10.0 - 0.5)
            .collect();
        let pot = Potentials::new(&spec, unary, factor).unwrap();
        let sol = sparsemap_active_set(&spec, &pot, &SolverSettings::default())
            .unwrap()
            .solution;
        assert_eq!(sol.status, SolveStatus::Converged);
        for w in sol.trace.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-12, "{:?}", sol.trace);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let (spec, pot) = dense(&[1.0, 2.0]);
        let bad = SolverSettings { max_iter: 0, ..Default::default() };
        assert!(sparsemap_active_set(&spec, &pot, &bad).is_err());
        assert!(sparsemap_active_set_with_penalty(&spec, &pot, 0.0, &Default::default()).is_err());
        let short = Potentials { unary: vec![1.0], factor: vec![] };
        assert!(sparsemap_active_set(&spec, &short, &Default::default()).is_err());
    }
}
