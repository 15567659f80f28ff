//! Structured Fenchel-Young losses
//!
//! ```text
//!     loss(eta, gold) = Omega*(A^T eta) + Omega(gold) - eta^T A gold
//! ```
//!
//! for the perceptron (`Omega = 0`), structured SVM, CRF (`Omega = -H`),
//! margin CRF, SparseMAP (`Omega = 1/2 ||M y||^2`) and margin SparseMAP. Margin
//! kinds subtract a Hamming cost `rho(y, gold)` from `Omega`, which turns the
//! conjugate into cost-augmented inference. The gradient with respect to
//! `eta` is `A (y* - gold)` for the inference output `y*`.

use serde::{Deserialize, Serialize};

use crate::activeset::sparsemap_active_set_with_penalty;
use crate::error::{Error, Result};
use crate::marginals::marginals;
use crate::model::{FactorSpec, Potentials, StructureColumn};
use crate::oracles::map_oracle;
use crate::solution::SolverSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Perceptron,
    StructuredSvm,
    Crf,
    MarginCrf,
    Sparsemap,
    MarginSparsemap,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::Perceptron,
        LossKind::StructuredSvm,
        LossKind::Crf,
        LossKind::MarginCrf,
        LossKind::Sparsemap,
        LossKind::MarginSparsemap,
    ];

    pub fn is_margin(&self) -> bool {
        matches!(
            self,
            LossKind::StructuredSvm | LossKind::MarginCrf | LossKind::MarginSparsemap
        )
    }
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "perceptron" => LossKind::Perceptron,
            "structured_svm" | "svm" => LossKind::StructuredSvm,
            "crf" => LossKind::Crf,
            "margin_crf" => LossKind::MarginCrf,
            "sparsemap" => LossKind::Sparsemap,
            "margin_sparsemap" => LossKind::MarginSparsemap,
            other => return Err(format!("unknown loss `{other}`")),
        })
    }
}

/// A loss kind with its Hamming cost weight (zero exactly for non-margin kinds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    kind: LossKind,
    cost_scale: f64,
}

impl Loss {
    pub fn new(kind: LossKind, cost_scale: f64) -> Result<Self> {
        if !(cost_scale >= 0.0 && cost_scale.is_finite()) {
            return Err(Error::InvalidSettings(format!(
                "cost scale must be finite and non-negative, got {cost_scale}"
            )));
        }
        if kind.is_margin() != (cost_scale > 0.0) {
            return Err(Error::InvalidSettings(format!(
                "{kind:?} requires a {} cost scale",
                if kind.is_margin() { "positive" } else { "zero" }
            )));
        }
        Ok(Loss { kind, cost_scale })
    }

    /// The kind with unit cost for margin kinds and zero otherwise.
    pub fn standard(kind: LossKind) -> Self {
        Loss {
            kind,
            cost_scale: if kind.is_margin() { 1.0 } else { 0.0 },
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn cost_scale(&self) -> f64 {
        self.cost_scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub grad_unary: Vec<f64>,
    pub grad_factor: Vec<f64>,
}

/// Linear form of the Hamming cost: for every structure `s`,
/// `vector^T m_s + constant = cost_scale * hamming(m_s, m_gold)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HammingCost {
    pub vector: Vec<f64>,
    pub constant: f64,
}

pub fn hamming_cost_vector(spec: &FactorSpec, gold: &StructureColumn, cost_scale: f64) -> HammingCost {
    let mut vector = vec![cost_scale; spec.unary_dim()];
    for &i in gold.unary_indices() {
        vector[i] = -cost_scale;
    }
    HammingCost {
        vector,
        constant: cost_scale * gold.unary_norm_sq() as f64,
    }
}

fn default_settings() -> SolverSettings {
    SolverSettings {
        max_iter: 1000,
        ..SolverSettings::default()
    }
}

pub fn fy_loss(loss: &Loss, spec: &FactorSpec, pot: &Potentials, gold: &StructureColumn) -> Result<LossResult> {
    fy_loss_scaled(loss, spec, pot, gold, 1.0, &default_settings())
}

/// Loss for the regularizer `strength * Omega`; `strength = 1` is [`fy_loss`].
pub fn fy_loss_scaled(
    loss: &Loss,
    spec: &FactorSpec,
    pot: &Potentials,
    gold: &StructureColumn,
    strength: f64,
    settings: &SolverSettings,
) -> Result<LossResult> {
    pot.check(spec)?;
    if gold.id().kind() != spec.kind() {
        return Err(Error::KindMismatch {
            expected: spec.kind(),
            found: gold.id().kind(),
        });
    }
    if let Some(&bad) = gold.unary_indices().last() {
        if bad >= spec.unary_dim() {
            return Err(Error::Encoding {
                index: bad,
                reason: "gold structure does not fit the spec".into(),
            });
        }
    }
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::InvalidSettings(format!(
            "regularization strength must be positive, got {strength}"
        )));
    }

    let cost = hamming_cost_vector(spec, gold, loss.cost_scale * strength);
    let augmented = pot.with_unary_offset(&cost.vector);
    let gold_score = gold.score(pot);

    let (conjugate, omega_gold, u, v) = match loss.kind {
        LossKind::Perceptron | LossKind::StructuredSvm => {
            let best = map_oracle(spec, &augmented)?;
            let u = best.column.unary_dense(spec.unary_dim());
            let v = best.column.factor_dense(spec.factor_dim());
            (best.score, 0.0, u, v)
        }
        LossKind::Crf | LossKind::MarginCrf => {
            let marg = marginals(spec, &augmented.scaled(1.0 / strength))?;
            (strength * marg.log_partition, 0.0, marg.u, marg.v)
        }
        LossKind::Sparsemap | LossKind::MarginSparsemap => {
            let sol = sparsemap_active_set_with_penalty(spec, &augmented, strength, settings)?.solution;
            let omega_gold = 0.5 * strength * gold.unary_norm_sq() as f64;
            (sol.objective, omega_gold, sol.u, sol.v)
        }
    };

    let value = conjugate + cost.constant + omega_gold - gold_score;
    let mut grad_unary = u;
    let mut grad_factor = v;
    gold.add_unary_to(&mut grad_unary, -1.0);
    gold.add_factor_to(&mut grad_factor, -1.0);
    Ok(LossResult {
        value,
        grad_unary,
        grad_factor,
    })
}

/// Checks `loss_{t Omega}(eta) == t * loss_Omega(eta / t)` to `1e-8`
/// relative (with a unit floor on the magnitude).
pub fn check_scaling_property(
    loss: &Loss,
    spec: &FactorSpec,
    pot: &Potentials,
    gold: &StructureColumn,
    t: f64,
) -> Result<bool> {
    let settings = default_settings();
    let lhs = fy_loss_scaled(loss, spec, pot, gold, t, &settings)?.value;
    let rhs = t * fy_loss_scaled(loss, spec, &pot.scaled(1.0 / t), gold, 1.0, &settings)?.value;
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    Ok((lhs - rhs).abs() <= 1e-8 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{structure_column, StructureId};

    #[test]
    fn hamming_examples() {
        let spec = FactorSpec::sequence(2, 2).unwrap();
        let gold = structure_column(&spec, &StructureId::Sequence(vec![0, 0])).unwrap();
        let other = structure_column(&spec, &StructureId::Sequence(vec![0, 1])).unwrap();
        let cost = hamming_cost_vector(&spec, &gold, 1.0);
        assert_eq!(other.unary_dot(&cost.vector) + cost.constant, 2.0);
        assert_eq!(gold.unary_dot(&cost.vector) + cost.constant, 0.0);
        let zero = hamming_cost_vector(&spec, &gold, 0.0);
        assert!(zero.vector.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn perceptron_zero_at_map() {
        let spec = FactorSpec::sequence(3, 2).unwrap();
        let mut pot = Potentials::zeros(&spec);
        pot.unary[spec.seq_unary(1, 1)] = 1.0;
        let gold = structure_column(&spec, &StructureId::Sequence(vec![0, 1, 0])).unwrap();
        let res = fy_loss(&Loss::standard(LossKind::Perceptron), &spec, &pot, &gold).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.grad_unary.iter().chain(&res.grad_factor).all(|&g| g == 0.0));
    }

    #[test]
    fn sparsemap_dense_example() {
        let spec = FactorSpec::dense(3).unwrap();
        let pot = Potentials::new(&spec, vec![1.0, 0.5, -1.0], vec![]).unwrap();
        let gold = structure_column(&spec, &StructureId::Dense(0)).unwrap();
        let res = fy_loss(&Loss::standard(LossKind::Sparsemap), &spec, &pot, &gold).unwrap();
        // theta^T y* = 0.875, ||u*||^2 / 2 = 0.3125
        let expected = (0.875 - 0.3125) + 0.5 - 1.0;
        assert!((res.value - expected).abs() < 1e-12);
        let g = [-0.25, 0.25, 0.0];
        for (a, b) in res.grad_unary.iter().zip(g) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_constructor_validates_cost() {
        assert!(Loss::new(LossKind::Crf, 1.0).is_err());
        assert!(Loss::new(LossKind::MarginCrf, 0.0).is_err());
        assert!(Loss::new(LossKind::MarginSparsemap, -1.0).is_err());
        assert!(Loss::new(LossKind::StructuredSvm, 0.5).is_ok());
    }

    #[test]
    fn crf_on_matching_is_unsupported() {
        let spec = FactorSpec::matching(2, 2).unwrap();
        let gold = structure_column(&spec, &StructureId::Matching(vec![Some(1), Some(0)])).unwrap();
        let err = fy_loss(&Loss::standard(LossKind::Crf), &spec, &Potentials::zeros(&spec), &gold).unwrap_err();
        assert!(matches!(err, Error::UnsupportedMarginal { .. }));
    }

    #[test]
    fn scaling_trivial_at_unit_strength() {
        let spec = FactorSpec::dense(3).unwrap();
        let pot = Potentials::new(&spec, vec![1.0, 0.5, -1.0], vec![]).unwrap();
        let gold = structure_column(&spec, &StructureId::Dense(0)).unwrap();
        for kind in LossKind::ALL {
            assert!(check_scaling_property(&Loss::standard(kind), &spec, &pot, &gold, 1.0).unwrap());
            assert!(check_scaling_property(&Loss::standard(kind), &spec, &pot, &gold, 2.0).unwrap());
        }
    }
}
