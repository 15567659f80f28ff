//! Synthetic structured-prediction training.
//!
//! Data: a ground-truth matrix `W*` with entries ±1, features
//! `x ~ N(0, I)` with one entry per unary coordinate, and gold structures
//! `MAP(W* x)` with zero factor potentials, so the data is realizable by
//! construction. The model scores `eta_U = W x`, `eta_F = b` and is trained
//! by plain (sub)gradient descent, one example at a time in a fixed order.

use rayon::prelude::*;
use serde::Serialize;
use sparsemap::{
    fy_loss_scaled, map_oracle, sparsemap_active_set, FactorSpec, Loss, LossKind, Potentials,
    SolverSettings, StructureColumn,
};

use crate::sampling::{item_rng, standard_normal};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub examples: usize,
    pub spec: FactorSpec,
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.examples == 0 {
            return Err(TrainError::Config("need at least one training example".into()));
        }
        Ok(())
    }
}

/// Metrics over the whole training set after an epoch (epoch 0: at
/// initialization).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Fraction of examples whose MAP structure equals the gold one.
    pub accuracy: f64,
    /// Mean SparseMAP support size under the current model.
    pub mean_support: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error(transparent)]
    Solver(#[from] sparsemap::Error),
}

struct Example {
    x: Vec<f64>,
    gold: StructureColumn,
}

struct Model {
    weights: Vec<f64>,
    bias: Vec<f64>,
    k_u: usize,
}

impl Model {
    fn potentials(&self, spec: &FactorSpec, x: &[f64], epoch: usize) -> Result<Potentials, TrainError> {
        let unary: Vec<f64> = self
            .weights
            .chunks(self.k_u)
            .map(|row| row.iter().zip(x).map(|(w, xi)| w * xi).sum())
            .collect();
        if !unary.iter().chain(&self.bias).all(|p| p.is_finite()) {
            return Err(TrainError::NonFinite { epoch });
        }
        Ok(Potentials::new(spec, unary, self.bias.clone())?)
    }
}

fn settings() -> SolverSettings {
    SolverSettings {
        max_iter: 1000,
        ..SolverSettings::default()
    }
}

fn make_data(cfg: &TrainerConfig) -> Result<Vec<Example>, TrainError> {
    let spec = &cfg.spec;
    let k_u = spec.unary_dim();
    let mut rng = item_rng(cfg.seed, 0);
    let truth = Model {
        weights: standard_normal(&mut rng, k_u * k_u)
            .into_iter()
            .map(|z| if z >= 0.0 { 1.0 } else { -1.0 })
            .collect(),
        bias: vec![0.0; spec.factor_dim()],
        k_u,
    };
    (0..cfg.examples)
        .map(|_| {
            let x = standard_normal(&mut rng, k_u);
            let gold = map_oracle(spec, &truth.potentials(spec, &x, 0)?)?.column;
            Ok(Example { x, gold })
        })
        .collect()
}

fn evaluate(cfg: &TrainerConfig, model: &Model, data: &[Example], epoch: usize) -> Result<EpochLog, TrainError> {
    let loss = Loss::standard(cfg.loss);
    let per_example: Vec<(f64, bool, usize)> = data
        .par_iter()
        .map(|ex| {
            let pot = model.potentials(&cfg.spec, &ex.x, epoch)?;
            let value = fy_loss_scaled(&loss, &cfg.spec, &pot, &ex.gold, 1.0, &settings())?.value;
            let correct = map_oracle(&cfg.spec, &pot)?.column == ex.gold;
            let support = sparsemap_active_set(&cfg.spec, &pot, &settings())?.solution.support_size();
            Ok((value, correct, support))
        })
        .collect::<Result<_, TrainError>>()?;
    let n = data.len() as f64;
    let total: f64 = per_example.iter().map(|e| e.0).sum();
    if !total.is_finite() {
        return Err(TrainError::NonFinite { epoch });
    }
    Ok(EpochLog {
        epoch,
        loss: total / n,
        accuracy: per_example.iter().filter(|e| e.1).count() as f64 / n,
        mean_support: per_example.iter().map(|e| e.2 as f64).sum::<f64>() / n,
    })
}

/// Trains and returns one log row per epoch, starting with epoch 0.
pub fn train(cfg: &TrainerConfig) -> Result<Vec<EpochLog>, TrainError> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let k_u = spec.unary_dim();
    let data = make_data(cfg)?;
    let loss = Loss::standard(cfg.loss);
    let mut model = Model {
        weights: vec![0.0; k_u * k_u],
        bias: vec![0.0; spec.factor_dim()],
        k_u,
    };

    let mut log = vec![evaluate(cfg, &model, &data, 0)?];
    for epoch in 1..=cfg.epochs {
        for ex in &data {
            let pot = model.potentials(spec, &ex.x, epoch)?;
            let res = fy_loss_scaled(&loss, spec, &pot, &ex.gold, 1.0, &settings())?;
            if !res.value.is_finite() {
                return Err(TrainError::NonFinite { epoch });
            }
            for (row, g) in model.weights.chunks_mut(k_u).zip(&res.grad_unary) {
                if *g != 0.0 {
                    for (w, xi) in row.iter_mut().zip(&ex.x) {
                        *w -= cfg.learning_rate * g * xi;
                    }
                }
            }
            for (b, g) in model.bias.iter_mut().zip(&res.grad_factor) {
                *b -= cfg.learning_rate * g;
            }
        }
        log.push(evaluate(cfg, &model, &data, epoch)?);
    }
    Ok(log)
}

pub fn write_csv<W: std::io::Write>(log: &[EpochLog], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in log {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
