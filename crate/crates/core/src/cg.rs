//! Conditional-gradient (Frank-Wolfe) solvers for SparseMAP: vanilla,
//! pairwise and away-step variants, all with exact line search.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, expect_len, FactorSpec, Potentials, StructureColumn};
use crate::oracles::map_oracle;
use crate::solution::{
    combine_support, sparsemap_objective, IterateRecord, SolveStatus, SolverSettings,
    SparseSolution,
};

/// Iterations between recomputations of `u, v` from the weighted atoms.
const RESYNC_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgVariant {
    Vanilla,
    Pairwise,
    AwayStep,
}

impl CgVariant {
    pub const ALL: [CgVariant; 3] = [CgVariant::Vanilla, CgVariant::Pairwise, CgVariant::AwayStep];

    pub fn name(&self) -> &'static str {
        match self {
            CgVariant::Vanilla => "cg-vanilla",
            CgVariant::Pairwise => "cg-pairwise",
            CgVariant::AwayStep => "cg-away",
        }
    }
}

/// Wolfe gap `<eta_U - u, d_u> + <eta_F, d_v>` of direction `d` at `u`.
pub fn wolfe_gap(d_u: &[f64], d_v: &[f64], u_current: &[f64], pot: &Potentials) -> Result<f64> {
    expect_len("direction (unary part)", pot.unary.len(), d_u.len())?;
    expect_len("direction (factor part)", pot.factor.len(), d_v.len())?;
    expect_len("current unary point", pot.unary.len(), u_current.len())?;
    Ok(gap(d_u, d_v, u_current, pot))
}

fn gap(d_u: &[f64], d_v: &[f64], u: &[f64], pot: &Potentials) -> f64 {
    let mut g = dot(&pot.factor, d_v);
    for ((e, x), d) in pot.unary.iter().zip(u).zip(d_u) {
        g += (e - x) * d;
    }
    g
}

/// Exact line search for `f(u + gamma d_u, v + gamma d_v)` over `[0, gamma_max]`.
pub fn cg_line_search(
    u_current: &[f64],
    d_u: &[f64],
    d_v: &[f64],
    pot: &Potentials,
    gamma_max: f64,
) -> f64 {
    let slope = pot.dot(d_u, d_v) - dot(u_current, d_u);
    let curvature = dot(d_u, d_u);
    if curvature == 0.0 {
        return if slope > 0.0 { gamma_max } else { 0.0 };
    }
    (slope / curvature).clamp(0.0, gamma_max)
}

struct Atoms {
    columns: Vec<StructureColumn>,
    weights: Vec<f64>,
}

impl Atoms {
    fn position(&self, col: &StructureColumn) -> Option<usize> {
        self.columns.iter().position(|c| c == col)
    }

    fn index_or_insert(&mut self, col: StructureColumn) -> usize {
        match self.position(&col) {
            Some(i) => i,
            None => {
                self.columns.push(col);
                self.weights.push(0.0);
                self.columns.len() - 1
            }
        }
    }

    fn prune(&mut self) {
        let mut i = 0;
        while i < self.weights.len() {
            if self.weights[i] <= 0.0 {
                self.columns.remove(i);
                self.weights.remove(i);
            } else {
                i += 1;
            }
        }
    }
}

enum Step {
    Forward { atom: StructureColumn },
    Away { atom: usize },
    Pairwise { toward: StructureColumn, away: usize },
}

/// Conditional-gradient SparseMAP solver.
pub fn sparsemap_cg(
    spec: &FactorSpec,
    pot: &Potentials,
    variant: CgVariant,
    settings: &SolverSettings,
) -> Result<SparseSolution> {
    settings.validate()?;
    pot.check(spec)?;
    let k_u = spec.unary_dim();
    let k_f = spec.factor_dim();

    let first = map_oracle(spec, pot)?;
    let mut atoms = Atoms {
        columns: vec![first.column],
        weights: vec![1.0],
    };
    let (mut u, mut v) = combine_support(spec, atoms.columns.iter().zip([1.0]));
    let clock = Instant::now();
    let mut trace = vec![IterateRecord {
        iteration: 0,
        objective: sparsemap_objective(pot, &u, &v, 1.0),
        support_size: 1,
        elapsed_ns: clock.elapsed().as_nanos() as u64,
    }];
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;

    for iter in 1..=settings.max_iter {
        iterations = iter;
        let forward = map_oracle(spec, &pot.adjusted(&u))?.column;
        let mut df_u: Vec<f64> = u.iter().map(|x| -x).collect();
        let mut df_v: Vec<f64> = v.iter().map(|x| -x).collect();
        forward.add_unary_to(&mut df_u, 1.0);
        forward.add_factor_to(&mut df_v, 1.0);
        let gap_forward = gap(&df_u, &df_v, &u, pot);
        if gap_forward < settings.gap_tol {
            status = SolveStatus::Converged;
            trace.push(IterateRecord {
                iteration: iter,
                objective: sparsemap_objective(pot, &u, &v, 1.0),
                support_size: atoms.columns.len(),
                elapsed_ns: clock.elapsed().as_nanos() as u64,
            });
            break;
        }

        // away atom: the active structure maximizing the linearization of the
        // minimization form, i.e. scoring worst under the adjusted potentials
        let adjusted: Vec<f64> = pot.unary.iter().zip(&u).map(|(e, x)| e - x).collect();
        let mut away = 0;
        let mut away_score = f64::INFINITY;
        for (i, col) in atoms.columns.iter().enumerate() {
            let s = col.unary_dot(&adjusted) + col.factor_indices().iter().map(|&j| pot.factor[j]).sum::<f64>();
            if s < away_score {
                away_score = s;
                away = i;
            }
        }
        let same_atom = atoms.columns[away] == forward;

        let (d_u, d_v, gamma_max, step) = match variant {
            _ if same_atom => (df_u, df_v, 1.0, Step::Forward { atom: forward }),
            CgVariant::Vanilla => (df_u, df_v, 1.0, Step::Forward { atom: forward }),
            CgVariant::Pairwise => {
                let mut d_u = vec![0.0; k_u];
                let mut d_v = vec![0.0; k_f];
                forward.add_unary_to(&mut d_u, 1.0);
                forward.add_factor_to(&mut d_v, 1.0);
                atoms.columns[away].add_unary_to(&mut d_u, -1.0);
                atoms.columns[away].add_factor_to(&mut d_v, -1.0);
                let gmax = atoms.weights[away];
                (d_u, d_v, gmax, Step::Pairwise { toward: forward, away })
            }
            CgVariant::AwayStep => {
                let mut dw_u = u.clone();
                let mut dw_v = v.clone();
                atoms.columns[away].add_unary_to(&mut dw_u, -1.0);
                atoms.columns[away].add_factor_to(&mut dw_v, -1.0);
                let gap_away = gap(&dw_u, &dw_v, &u, pot);
                if gap_forward >= gap_away {
                    (df_u, df_v, 1.0, Step::Forward { atom: forward })
                } else {
                    let y_w = atoms.weights[away];
                    let gmax = if y_w < 1.0 { y_w / (1.0 - y_w) } else { f64::INFINITY };
                    (dw_u, dw_v, gmax, Step::Away { atom: away })
                }
            }
        };

        let gamma = cg_line_search(&u, &d_u, &d_v, pot, gamma_max);
        let hit_max = gamma == gamma_max;
        match step {
            Step::Forward { atom } => {
                for w in atoms.weights.iter_mut() {
                    *w *= 1.0 - gamma;
                }
                let i = atoms.index_or_insert(atom);
                atoms.weights[i] += gamma;
                if hit_max {
                    // full step lands on the vertex
                    for (j, w) in atoms.weights.iter_mut().enumerate() {
                        *w = if j == i { 1.0 } else { 0.0 };
                    }
                }
            }
            Step::Away { atom } => {
                for w in atoms.weights.iter_mut() {
                    *w *= 1.0 + gamma;
                }
                atoms.weights[atom] -= gamma;
                if hit_max {
                    atoms.weights[atom] = 0.0;
                }
            }
            Step::Pairwise { toward, away } => {
                atoms.weights[away] -= gamma;
                if hit_max {
                    atoms.weights[away] = 0.0;
                }
                let i = atoms.index_or_insert(toward);
                atoms.weights[i] += gamma;
            }
        }
        atoms.prune();

        if iter % RESYNC_EVERY == 0 || hit_max {
            let total: f64 = atoms.weights.iter().sum();
            atoms.weights.iter_mut().for_each(|w| *w /= total);
            (u, v) = combine_support(spec, atoms.columns.iter().zip(atoms.weights.iter().copied()));
        } else {
            for (x, d) in u.iter_mut().zip(&d_u) {
                *x += gamma * d;
            }
            for (x, d) in v.iter_mut().zip(&d_v) {
                *x += gamma * d;
            }
        }
        trace.push(IterateRecord {
            iteration: iter,
            objective: sparsemap_objective(pot, &u, &v, 1.0),
            support_size: atoms.columns.len(),
            elapsed_ns: clock.elapsed().as_nanos() as u64,
        });
    }

    let total: f64 = atoms.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidSettings("conditional gradient lost all weight".into()));
    }
    atoms.weights.iter_mut().for_each(|w| *w /= total);
    let (u, v) = combine_support(spec, atoms.columns.iter().zip(atoms.weights.iter().copied()));
    let objective = sparsemap_objective(pot, &u, &v, 1.0);
    Ok(SparseSolution {
        u,
        v,
        support: atoms.columns.into_iter().zip(atoms.weights).collect(),
        objective,
        status,
        iterations,
        degenerate_rejections: 0,
        trace,
    })
}
