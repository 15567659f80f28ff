//! Finite-difference validation of the SparseMAP Jacobian-vector product.
//!
//! Each trial draws potentials and an upstream vector `p`, then compares
//! `jvp(p)` with central differences of `p^T u*(eta)` in every coordinate of
//! `eta`. Trials whose support changes under some perturbation sit on a
//! boundary of non-differentiability and are skipped.

use rayon::prelude::*;
use serde::Serialize;
use sparsemap::{sparsemap_active_set, FactorSpec, Kind, Potentials, SolverSettings, StructureId};

use crate::sampling::{item_rng, random_potentials, standard_normal};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub spec: FactorSpec,
    pub trials: usize,
    pub seed: u64,
    /// Standard deviation of the random potentials.
    pub scale: f64,
    pub eps: f64,
    /// Relative error at which a trial passes.
    pub tolerance: f64,
    pub settings: SolverSettings,
}

impl GradCheckConfig {
    pub fn new(spec: FactorSpec, trials: usize, seed: u64) -> Self {
        GradCheckConfig {
            spec,
            trials,
            seed,
            scale: 1.0,
            eps: 1e-5,
            tolerance: 1e-3,
            settings: SolverSettings {
                max_iter: 1000,
                ..SolverSettings::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub support_size: usize,
    /// `None` when the support changed under perturbation.
    pub relative_error: Option<f64>,
    /// For single-structure supports: whether every jvp entry is exactly zero.
    pub exact_zero: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub kind: Kind,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub stable_trials: usize,
    pub passed: usize,
    /// `passed / stable_trials` (zero without stable trials).
    pub pass_rate: f64,
    pub max_relative_error: f64,
    pub single_support_trials: usize,
    pub single_support_exact_zero: bool,
    /// Fewer than half the trials were support-stable.
    pub inconclusive: bool,
    pub details: Vec<TrialResult>,
}

fn sorted_support(spec: &FactorSpec, pot: &Potentials, settings: &SolverSettings) -> sparsemap::Result<(Vec<f64>, Vec<StructureId>)> {
    let sol = sparsemap_active_set(spec, pot, settings)?.solution;
    let mut ids: Vec<StructureId> = sol.support.iter().map(|(c, _)| c.id().clone()).collect();
    ids.sort();
    Ok((sol.u, ids))
}

fn run_trial(cfg: &GradCheckConfig, trial: usize) -> sparsemap::Result<TrialResult> {
    let spec = &cfg.spec;
    let mut rng = item_rng(cfg.seed, trial as u64);
    let pot = random_potentials(spec, &mut rng, cfg.scale);
    let p = standard_normal(&mut rng, spec.unary_dim());

    let out = sparsemap_active_set(spec, &pot, &cfg.settings)?;
    let (g_u, g_f) = out.jacobian.jvp(&p)?;
    let support_size = out.solution.support_size();
    let exact_zero = (support_size == 1).then(|| g_u.iter().chain(&g_f).all(|&g| g == 0.0));

    let mut base: Vec<StructureId> = out.solution.support.iter().map(|(c, _)| c.id().clone()).collect();
    base.sort();
    let k_u = spec.unary_dim();
    let mut worst = 0.0f64;
    let mut magnitude = 1e-6f64;
    for j in 0..k_u + spec.factor_dim() {
        let mut values = [0.0; 2];
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut q = pot.clone();
            if j < k_u {
                q.unary[j] += sign * cfg.eps;
            } else {
                q.factor[j - k_u] += sign * cfg.eps;
            }
            let (u, ids) = sorted_support(spec, &q, &cfg.settings)?;
            if ids != base {
                return Ok(TrialResult {
                    trial,
                    support_size,
                    relative_error: None,
                    exact_zero,
                });
            }
            values[slot] = p.iter().zip(&u).map(|(a, b)| a * b).sum();
        }
        let fd = (values[0] - values[1]) / (2.0 * cfg.eps);
        let g = if j < k_u { g_u[j] } else { g_f[j - k_u] };
        worst = worst.max((g - fd).abs());
        magnitude = magnitude.max(fd.abs()).max(g.abs());
    }
    Ok(TrialResult {
        trial,
        support_size,
        relative_error: Some(worst / magnitude),
        exact_zero,
    })
}

pub fn grad_check(cfg: &GradCheckConfig) -> sparsemap::Result<GradCheckReport> {
    let details: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<sparsemap::Result<_>>()?;
    let errors: Vec<f64> = details.iter().filter_map(|d| d.relative_error).collect();
    let stable_trials = errors.len();
    let passed = errors.iter().filter(|&&e| e <= cfg.tolerance).count();
    let singles: Vec<bool> = details.iter().filter_map(|d| d.exact_zero).collect();
    Ok(GradCheckReport {
        kind: cfg.spec.kind(),
        dims: cfg.spec.dims(),
        trials: cfg.trials,
        stable_trials,
        passed,
        pass_rate: if stable_trials > 0 { passed as f64 / stable_trials as f64 } else { 0.0 },
        max_relative_error: errors.iter().copied().fold(0.0, f64::max),
        single_support_trials: singles.len(),
        single_support_exact_zero: singles.iter().all(|&z| z),
        inconclusive: 2 * stable_trials < cfg.trials,
        details,
    })
}
