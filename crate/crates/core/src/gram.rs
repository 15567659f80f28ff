//! Cholesky factor of the support Gram matrix `penalty * M_I^T M_I`.

use crate::model::StructureColumn;

/// Relative pivot below which a new column counts as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-9;
/// Reconstruction error that triggers a full refactorization after an append.
const REFACTOR_TOL: f64 = 1e-8;

/// Lower-triangular `L` with `L L^T = G`, where `G[i][j] = penalty * m_i^T m_j`.
///
/// Grown one row at a time; removing a column rebuilds the factor from the
/// stored Gram entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor {
    penalty: f64,
    gram: Vec<Vec<f64>>,
    lower: Vec<Vec<f64>>,
}

/// Returned when a column lies in the span of the current support.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependent {
    /// `c` with `M_I c = m_new` (least-squares sense).
    pub coefficients: Vec<f64>,
}

impl GramFactor {
    pub fn new(penalty: f64) -> Self {
        GramFactor {
            penalty,
            gram: Vec::new(),
            lower: Vec::new(),
        }
    }

    /// Factors the Gram matrix of `columns`, failing with the index of the
    /// first column dependent on its predecessors.
    pub fn from_columns(columns: &[StructureColumn], penalty: f64) -> Result<Self, usize> {
        let mut factor = GramFactor::new(penalty);
        for (i, col) in columns.iter().enumerate() {
            factor.push(&columns[..i], col).map_err(|_| i)?;
        }
        Ok(factor)
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    /// Appends `col`, given the columns already factored (in order).
    pub fn push(&mut self, existing: &[StructureColumn], col: &StructureColumn) -> Result<(), Dependent> {
        debug_assert_eq!(existing.len(), self.len());
        let row: Vec<f64> = existing
            .iter()
            .map(|c| self.penalty * c.unary_overlap(col) as f64)
            .collect();
        let diag = self.penalty * col.unary_norm_sq() as f64;
        let l = self.forward(&row);
        let pivot = diag - l.iter().map(|x| x * x).sum::<f64>();
        if pivot <= DEPENDENCE_TOL * diag.max(f64::MIN_POSITIVE) {
            return Err(Dependent {
                coefficients: self.backward(&l),
            });
        }
        for (g, &x) in self.gram.iter_mut().zip(&row) {
            g.push(x);
        }
        let mut full_row = row;
        full_row.push(diag);
        self.gram.push(full_row);
        let mut lrow = l;
        lrow.push(pivot.sqrt());
        self.lower.push(lrow);
        if self.append_residual() > REFACTOR_TOL && self.refactor().is_err() {
            let last = self.len() - 1;
            self.remove(last);
            return Err(Dependent {
                coefficients: Vec::new(),
            });
        }
        Ok(())
    }

    /// Drops row and column `index` and refactors.
    pub fn remove(&mut self, index: usize) {
        self.gram.remove(index);
        for row in &mut self.gram {
            row.remove(index);
        }
        self.refactor()
            .expect("principal submatrix of a positive definite matrix is positive definite");
    }

    /// Solves `G x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// Column `j` of `Z = G^{-1}`.
    pub fn inverse_column(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.len()];
        e[j] = 1.0;
        self.solve(&e)
    }

    /// Largest absolute entry of `L L^T - G`.
    pub fn residual(&self) -> f64 {
        let k = self.len();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..=i {
                let recon: f64 = (0..=j).map(|p| self.lower[i][p] * self.lower[j][p]).sum();
                worst = worst.max((recon - self.gram[i][j]).abs());
            }
        }
        worst
    }

    // reconstruction error of the newest row only
    fn append_residual(&self) -> f64 {
        let k = self.len();
        let last = &self.lower[k - 1];
        (0..k)
            .map(|j| {
                let recon: f64 = (0..=j).map(|p| last[p] * self.lower[j][p]).sum();
                (recon - self.gram[k - 1][j]).abs()
            })
            .fold(0.0, f64::max)
    }

    fn refactor(&mut self) -> Result<(), usize> {
        let k = self.gram.len();
        let mut lower: Vec<Vec<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut row = vec![0.0; i + 1];
            for j in 0..=i {
                let prev: &[f64] = if j == i { &row } else { &lower[j] };
                let s: f64 = self.gram[i][j] - (0..j).map(|p| row[p] * prev[p]).sum::<f64>();
                if j == i {
                    if s <= DEPENDENCE_TOL * self.gram[i][i].max(f64::MIN_POSITIVE) {
                        return Err(i);
                    }
                    row[j] = s.sqrt();
                } else {
                    row[j] = s / lower[j][j];
                }
            }
            lower.push(row);
        }
        self.lower = lower;
        Ok(())
    }

    // L x = b
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        for i in 0..b.len() {
            let s: f64 = (0..i).map(|p| self.lower[i][p] * x[p]).sum();
            x[i] = (b[i] - s) / self.lower[i][i];
        }
        x
    }

    // L^T x = b
    fn backward(&self, b: &[f64]) -> Vec<f64> {
        let k = b.len();
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|p| self.lower[p][i] * x[p]).sum();
            x[i] = (b[i] - s) / self.lower[i][i];
        }
        x
    }
}
