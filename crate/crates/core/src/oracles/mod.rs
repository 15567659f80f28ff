//! MAP oracles, one per structure family.
//!
//! [`map_oracle`] is the only structure-specific entry point the solvers use.
//! Ties are broken deterministically, preferring lower indices.

mod arborescence;
mod matching;
mod sequence;

pub use arborescence::max_arborescence;
pub use matching::max_assignment;
pub use sequence::viterbi;

use crate::error::{Error, Result};
use crate::model::{structure_column, FactorSpec, Kind, Potentials, StructureColumn, StructureId};

/// Highest-scoring structure and its score `theta_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub column: StructureColumn,
    pub score: f64,
}

impl MapResult {
    fn new(spec: &FactorSpec, pot: &Potentials, id: StructureId) -> Self {
        let column = structure_column(spec, &id).expect("oracle produced a malformed structure");
        let score = column.score(pot);
        MapResult { column, score }
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

pub fn map_dense(spec: &FactorSpec, pot: &Potentials) -> Result<MapResult> {
    expect_kind(spec, Kind::Dense)?;
    pot.check(spec)?;
    let mut best = 0;
    for (i, &x) in pot.unary.iter().enumerate() {
        if x > pot.unary[best] {
            best = i;
        }
    }
    Ok(MapResult::new(spec, pot, StructureId::Dense(best)))
}

/// Max-sum Viterbi over unary, start, interior and end scores.
pub fn map_sequence(spec: &FactorSpec, pot: &Potentials) -> Result<MapResult> {
    expect_kind(spec, Kind::Sequence)?;
    pot.check(spec)?;
    let path = viterbi(spec, pot);
    Ok(MapResult::new(spec, pot, StructureId::Sequence(path)))
}

/// Maximum-weight rooted arborescence (Chu-Liu/Edmonds).
pub fn map_arborescence(spec: &FactorSpec, pot: &Potentials) -> Result<MapResult> {
    expect_kind(spec, Kind::Arborescence)?;
    pot.check(spec)?;
    let FactorSpec::Arborescence { len } = *spec else { unreachable!() };
    let mut scores = vec![vec![f64::NEG_INFINITY; len + 1]; len + 1];
    for (h, row) in scores.iter_mut().enumerate() {
        for (m, cell) in row.iter_mut().enumerate().skip(1) {
            if let Some(idx) = spec.arc_index(h, m) {
                *cell = pot.unary[idx];
            }
        }
    }
    let parents = max_arborescence(&scores);
    Ok(MapResult::new(spec, pot, StructureId::Arborescence(parents[1..].to_vec())))
}

/// Maximum-weight assignment (Hungarian algorithm on the padded square).
pub fn map_matching(spec: &FactorSpec, pot: &Potentials) -> Result<MapResult> {
    expect_kind(spec, Kind::Matching)?;
    pot.check(spec)?;
    let FactorSpec::Matching { rows, cols } = *spec else { unreachable!() };
    let size = rows.max(cols);
    let mut scores = vec![vec![0.0; size]; size];
    for (i, row) in scores.iter_mut().enumerate().take(rows) {
        for (j, cell) in row.iter_mut().enumerate().take(cols) {
            *cell = pot.unary[spec.pair_index(i, j)];
        }
    }
    let assignment = max_assignment(&scores);
    let assign = assignment[..rows]
        .iter()
        .map(|&j| (j < cols).then_some(j))
        .collect();
    Ok(MapResult::new(spec, pot, StructureId::Matching(assign)))
}

/// Dispatches to the oracle for `spec`'s kind.
pub fn map_oracle(spec: &FactorSpec, pot: &Potentials) -> Result<MapResult> {
    match spec.kind() {
        Kind::Dense => map_dense(spec, pot),
        Kind::Sequence => map_sequence(spec, pot),
        Kind::Arborescence => map_arborescence(spec, pot),
        Kind::Matching => map_matching(spec, pot),
    }
}
