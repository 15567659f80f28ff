//! Exact marginal inference and log-partition functions where tractable.
//!
//! This is the only module working in the log domain. Sequences use
//! forward-backward; arborescences use the matrix-tree theorem on the
//! Laplacian minor indexed by words `1..=n`:
//!
//! ```text
//!     L[m][m] = sum_{h != m} w(h, m)        (h ranges over 0..=n)
//!     L[h][m] = -w(h, m)                    (h, m in 1..=n, h != m)
//! ```
//!
//! with `w(h, m) = exp(theta(h, m) - c)` for the max score `c`. Then
//! `log Z = log det L + n c` and the arc marginal is
//! `w(h, m) * (Linv[m][m] - Linv[m][h])`, dropping the second term for the
//! root.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{FactorSpec, Kind, Potentials};

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalResult {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `log sum_s exp(theta_s)`.
    pub log_partition: f64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Softmax marginals of a dense spec.
pub fn marginal_dense(spec: &FactorSpec, pot: &Potentials) -> Result<MarginalResult> {
    expect_kind(spec, Kind::Dense)?;
    pot.check(spec)?;
    let log_partition = log_sum_exp(pot.unary.iter().copied());
    let u = pot.unary.iter().map(|x| (x - log_partition).exp()).collect();
    Ok(MarginalResult {
        u,
        v: Vec::new(),
        log_partition,
    })
}

/// Forward-backward marginals of a sequence spec.
pub fn marginal_sequence(spec: &FactorSpec, pot: &Potentials) -> Result<MarginalResult> {
    expect_kind(spec, Kind::Sequence)?;
    pot.check(spec)?;
    let FactorSpec::Sequence { len, tags } = *spec else { unreachable!() };
    let unary = |i: usize, t: usize| pot.unary[spec.seq_unary(i, t)];
    let trans = |i: usize, a: usize, b: usize| pot.factor[spec.seq_transition(i, a, b)];

    let mut alpha = vec![vec![0.0; tags]; len];
    for t in 0..tags {
        alpha[0][t] = pot.factor[spec.seq_start(t)] + unary(0, t);
    }
    for i in 1..len {
        for b in 0..tags {
            let prev = &alpha[i - 1];
            alpha[i][b] = log_sum_exp((0..tags).map(|a| prev[a] + trans(i, a, b))) + unary(i, b);
        }
    }
    let log_partition =
        log_sum_exp((0..tags).map(|t| alpha[len - 1][t] + pot.factor[spec.seq_end(t)]));

    let mut beta = vec![vec![0.0; tags]; len];
    for t in 0..tags {
        beta[len - 1][t] = pot.factor[spec.seq_end(t)];
    }
    for i in (0..len - 1).rev() {
        for a in 0..tags {
            let next = &beta[i + 1];
            beta[i][a] = log_sum_exp((0..tags).map(|b| trans(i + 1, a, b) + unary(i + 1, b) + next[b]));
        }
    }

    let mut u = vec![0.0; spec.unary_dim()];
    for i in 0..len {
        for t in 0..tags {
            u[spec.seq_unary(i, t)] = (alpha[i][t] + beta[i][t] - log_partition).exp();
        }
    }
    let mut v = vec![0.0; spec.factor_dim()];
    for i in 1..len {
        for a in 0..tags {
            for b in 0..tags {
                let logp = alpha[i - 1][a] + trans(i, a, b) + unary(i, b) + beta[i][b] - log_partition;
                v[spec.seq_transition(i, a, b)] = logp.exp();
            }
        }
    }
    for t in 0..tags {
        v[spec.seq_start(t)] = u[spec.seq_unary(0, t)];
        v[spec.seq_end(t)] = u[spec.seq_unary(len - 1, t)];
    }
    Ok(MarginalResult { u, v, log_partition })
}

/// Matrix-tree arc marginals of an arborescence spec.
pub fn marginal_arborescence(spec: &FactorSpec, pot: &Potentials) -> Result<MarginalResult> {
    expect_kind(spec, Kind::Arborescence)?;
    pot.check(spec)?;
    let FactorSpec::Arborescence { len } = *spec else { unreachable!() };
    let shift = pot.unary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weight = |idx: usize| (pot.unary[idx] - shift).exp();

    let mut laplacian = DMatrix::<f64>::zeros(len, len);
    for idx in 0..spec.unary_dim() {
        let (h, m) = spec.arc(idx);
        let w = weight(idx);
        laplacian[(m - 1, m - 1)] += w;
        if h > 0 {
            laplacian[(h - 1, m - 1)] -= w;
        }
    }

    let lu = laplacian.lu();
    let upper = lu.u();
    let mut sign = lu.p().determinant::<f64>();
    let mut log_det = 0.0;
    for i in 0..len {
        let d = upper[(i, i)];
        sign *= d.signum();
        log_det += d.abs().ln();
    }
    if !(sign > 0.0 && log_det.is_finite()) {
        return Err(Error::IllConditioned {
            reason: format!("Laplacian determinant sign {sign}, log-magnitude {log_det}"),
        });
    }
    let inverse = lu.try_inverse().ok_or_else(|| Error::IllConditioned {
        reason: "Laplacian is singular".into(),
    })?;

    let mut u = vec![0.0; spec.unary_dim()];
    for (idx, slot) in u.iter_mut().enumerate() {
        let (h, m) = spec.arc(idx);
        let diag = inverse[(m - 1, m - 1)];
        let cross = if h > 0 { inverse[(m - 1, h - 1)] } else { 0.0 };
        *slot = weight(idx) * (diag - cross);
    }
    if let Some(bad) = u.iter().position(|x| !x.is_finite() || *x < -1e-9) {
        return Err(Error::IllConditioned {
            reason: format!("arc marginal {bad} evaluated to {}", u[bad]),
        });
    }
    Ok(MarginalResult {
        u,
        v: Vec::new(),
        log_partition: log_det + len as f64 * shift,
    })
}

/// Always fails: marginal inference for `spec`'s kind has no tractable
/// algorithm (for matchings it amounts to computing a permanent).
pub fn marginal_unavailable(spec: &FactorSpec) -> Error {
    Error::UnsupportedMarginal {
        kind: spec.kind(),
        reason: "computing the partition function is #P-complete",
    }
}

/// Dispatches to the marginal routine for `spec`'s kind.
pub fn marginals(spec: &FactorSpec, pot: &Potentials) -> Result<MarginalResult> {
    match spec.kind() {
        Kind::Dense => marginal_dense(spec, pot),
        Kind::Sequence => marginal_sequence(spec, pot),
        Kind::Arborescence => marginal_arborescence(spec, pot),
        Kind::Matching => Err(marginal_unavailable(spec)),
    }
}

fn expect_kind(spec: &FactorSpec, kind: Kind) -> Result<()> {
    if spec.kind() != kind {
        return Err(Error::KindMismatch {
            expected: spec.kind(),
            found: kind,
        });
    }
    Ok(())
}
