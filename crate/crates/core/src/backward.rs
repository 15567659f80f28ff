//! Jacobian-vector products of the SparseMAP solution map.
//!
//! On a neighbourhood where the optimal support `I` is fixed,
//! `du/d eta = M D A^T` with `D = Z - (Z 1)(Z 1)^T / (1^T Z 1)` on `I` and zero
//! elsewhere, `Z = (M_I^T M_I)^{-1}`. Products only touch the support columns.

use crate::error::{Error, Result};
use crate::gram::GramFactor;
use crate::model::{expect_len, FactorSpec, StructureColumn};
use crate::solution::SparseSolution;

/// Support columns and Gram factor captured from a converged solve.
#[derive(Debug, Clone)]
pub struct JacobianContext {
    unary_dim: usize,
    factor_dim: usize,
    columns: Vec<StructureColumn>,
    gram: GramFactor,
}

impl JacobianContext {
    pub(crate) fn new(spec: &FactorSpec, columns: Vec<StructureColumn>, gram: GramFactor) -> Self {
        debug_assert_eq!(columns.len(), gram.len());
        JacobianContext {
            unary_dim: spec.unary_dim(),
            factor_dim: spec.factor_dim(),
            columns,
            gram,
        }
    }

    /// Refactors the support of an existing solution (e.g. one produced by a
    /// conditional-gradient solver).
    pub fn from_solution(spec: &FactorSpec, solution: &SparseSolution) -> Result<Self> {
        let columns: Vec<_> = solution.support.iter().map(|(c, _)| c.clone()).collect();
        if columns.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "solution support",
                expected: 1,
                got: 0,
            });
        }
        let gram = GramFactor::from_columns(&columns, 1.0)
            .map_err(|index| Error::DegenerateSupport { index })?;
        Ok(Self::new(spec, columns, gram))
    }

    pub fn support(&self) -> &[StructureColumn] {
        &self.columns
    }

    pub fn gram_factor(&self) -> &GramFactor {
        &self.gram
    }

    /// `D(I)` restricted to the support: the Jacobian of the support weights
    /// with respect to the support scores `theta_I`.
    pub fn support_sensitivity(&self) -> Vec<Vec<f64>> {
        let k = self.columns.len();
        let z: Vec<Vec<f64>> = (0..k).map(|j| self.gram.inverse_column(j)).collect();
        let z_one: Vec<f64> = (0..k).map(|i| z.iter().map(|col| col[i]).sum()).collect();
        let denom: f64 = z_one.iter().sum();
        (0..k)
            .map(|i| (0..k).map(|j| z[j][i] - z_one[i] * z_one[j] / denom).collect())
            .collect()
    }

    /// `(du/d eta)^T p`, split into its unary and factor parts.
    pub fn jvp(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        expect_len("upstream gradient", self.unary_dim, p.len())?;
        if let Some(index) = p.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "upstream gradient", index });
        }
        let mut g_unary = vec![0.0; self.unary_dim];
        let mut g_factor = vec![0.0; self.factor_dim];
        if self.columns.len() == 1 {
            // the centering projector annihilates a single column; skip the
            // round-off of computing it
            return Ok((g_unary, g_factor));
        }
        let projected: Vec<f64> = self.columns.iter().map(|c| c.unary_dot(p)).collect();
        let mut s = self.gram.solve(&projected);
        let z_one = self.gram.solve(&vec![1.0; self.columns.len()]);
        let shift = s.iter().sum::<f64>() / z_one.iter().sum::<f64>();
        for (si, zi) in s.iter_mut().zip(&z_one) {
            *si -= shift * zi;
        }
        for (col, &w) in self.columns.iter().zip(&s) {
            col.add_unary_to(&mut g_unary, w);
            col.add_factor_to(&mut g_factor, w);
        }
        Ok((g_unary, g_factor))
    }
}

/// Free-function form of [`JacobianContext::jvp`].
pub fn sparsemap_jvp(ctx: &JacobianContext, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    ctx.jvp(p)
}
