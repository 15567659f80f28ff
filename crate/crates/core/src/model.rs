//! Structure families, log-potentials and the implicit `A = [M; N]` matrix.
//!
//! Every structure `s` is a vertex of the marginal polytope, represented by a
//! [`StructureColumn`] holding the sparse 0/1 column `a_s = [m_s; n_s]`. The
//! coordinate layouts are fixed here and shared by all oracles and solvers:
//!
//! * **dense** `d`: `k_U = d`, `k_F = 0`.
//! * **sequence** of length `n` over `m` tags: unary index `i*m + t`. The factor
//!   vector holds `n-1` interior transition blocks (transition into position
//!   `i = 1..n`, index `(i-1)*m*m + a*m + b`), then a start block of length `m`
//!   and an end block of length `m`, so `k_F = (n-1)*m*m + 2*m`.
//! * **arborescence** over `n` words: arcs `(head, modifier)` with
//!   `head in 0..=n`, `modifier in 1..=n`, `head != modifier`, ordered
//!   row-major by head, so `k_U = n*n`. Node 0 is the root and may have
//!   several children.
//! * **matching** between `n` rows and `m` columns: unary index `i*m + j`. When
//!   `n != m` the smaller side is implicitly padded with dummy nodes and
//!   dummy-incident pairs are dropped from the column.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on the number of structures [`enumerate_structures`] will list.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Dense,
    Sequence,
    Arborescence,
    Matching,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Dense => "dense",
            Kind::Sequence => "sequence",
            Kind::Arborescence => "arborescence",
            Kind::Matching => "matching",
        })
    }
}

impl std::str::FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dense" => Ok(Kind::Dense),
            "sequence" => Ok(Kind::Sequence),
            "arborescence" => Ok(Kind::Arborescence),
            "matching" => Ok(Kind::Matching),
            other => Err(format!("unknown structure kind `{other}`")),
        }
    }
}

/// Structure family together with its dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorSpec {
    Dense { d: usize },
    Sequence { len: usize, tags: usize },
    Arborescence { len: usize },
    Matching { rows: usize, cols: usize },
}

impl FactorSpec {
    pub fn dense(d: usize) -> Result<Self> {
        Self::validated(FactorSpec::Dense { d })
    }

    pub fn sequence(len: usize, tags: usize) -> Result<Self> {
        Self::validated(FactorSpec::Sequence { len, tags })
    }

    pub fn arborescence(len: usize) -> Result<Self> {
        Self::validated(FactorSpec::Arborescence { len })
    }

    pub fn matching(rows: usize, cols: usize) -> Result<Self> {
        Self::validated(FactorSpec::Matching { rows, cols })
    }

    /// Builds a spec from a kind and its dimension list (`[d]`, `[n, m]`,
    /// `[n]` or `[n, m]` respectively).
    pub fn from_dims(kind: Kind, dims: &[usize]) -> Result<Self> {
        let bad = |reason: String| Error::InvalidDims { kind, reason };
        match (kind, dims) {
            (Kind::Dense, [d]) => Self::dense(*d),
            (Kind::Sequence, [n, m]) => Self::sequence(*n, *m),
            (Kind::Arborescence, [n]) => Self::arborescence(*n),
            (Kind::Matching, [n, m]) => Self::matching(*n, *m),
            (Kind::Matching, [n]) => Self::matching(*n, *n),
            _ => Err(bad(format!("unexpected dimension list {dims:?}"))),
        }
    }

    fn validated(spec: Self) -> Result<Self> {
        if spec.dims().contains(&0) {
            return Err(Error::InvalidDims {
                kind: spec.kind(),
                reason: "all dimensions must be at least 1".into(),
            });
        }
        Ok(spec)
    }

    pub fn kind(&self) -> Kind {
        match self {
            FactorSpec::Dense { .. } => Kind::Dense,
            FactorSpec::Sequence { .. } => Kind::Sequence,
            FactorSpec::Arborescence { .. } => Kind::Arborescence,
            FactorSpec::Matching { .. } => Kind::Matching,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            FactorSpec::Dense { d } => vec![d],
            FactorSpec::Sequence { len, tags } => vec![len, tags],
            FactorSpec::Arborescence { len } => vec![len],
            FactorSpec::Matching { rows, cols } => vec![rows, cols],
        }
    }

    /// `k_U`, the number of unary coordinates.
    pub fn unary_dim(&self) -> usize {
        match *self {
            FactorSpec::Dense { d } => d,
            FactorSpec::Sequence { len, tags } => len * tags,
            FactorSpec::Arborescence { len } => len * len,
            FactorSpec::Matching { rows, cols } => rows * cols,
        }
    }

    /// `k_F`, the number of factor coordinates.
    pub fn factor_dim(&self) -> usize {
        match *self {
            FactorSpec::Sequence { len, tags } => (len - 1) * tags * tags + 2 * tags,
            _ => 0,
        }
    }

    /// Number of structures `D`, saturating at `u128::MAX`.
    pub fn structure_count(&self) -> u128 {
        match *self {
            FactorSpec::Dense { d } => d as u128,
            FactorSpec::Sequence { len, tags } => saturating_pow(tags as u128, len),
            FactorSpec::Arborescence { len } => saturating_pow(len as u128 + 1, len - 1),
            FactorSpec::Matching { rows, cols } => {
                let (hi, lo) = (rows.max(cols) as u128, rows.min(cols) as u128);
                (hi - lo + 1..=hi).fold(1u128, |acc, x| acc.saturating_mul(x))
            }
        }
    }

    /// Unary index of `(position, tag)` in a sequence spec.
    pub fn seq_unary(&self, pos: usize, tag: usize) -> usize {
        let FactorSpec::Sequence { tags, .. } = *self else {
            panic!("seq_unary called on {} spec", self.kind())
        };
        pos * tags + tag
    }

    /// Factor index of the transition `a -> b` into position `pos` (`1..len`).
    pub fn seq_transition(&self, pos: usize, a: usize, b: usize) -> usize {
        let FactorSpec::Sequence { tags, .. } = *self else {
            panic!("seq_transition called on {} spec", self.kind())
        };
        debug_assert!(pos >= 1);
        (pos - 1) * tags * tags + a * tags + b
    }

    pub fn seq_start(&self, tag: usize) -> usize {
        let FactorSpec::Sequence { len, tags } = *self else {
            panic!("seq_start called on {} spec", self.kind())
        };
        (len - 1) * tags * tags + tag
    }

    pub fn seq_end(&self, tag: usize) -> usize {
        let FactorSpec::Sequence { len, tags } = *self else {
            panic!("seq_end called on {} spec", self.kind())
        };
        (len - 1) * tags * tags + tags + tag
    }

    /// Unary index of the arc `head -> modifier`, or `None` for an invalid arc.
    pub fn arc_index(&self, head: usize, modifier: usize) -> Option<usize> {
        let FactorSpec::Arborescence { len } = *self else {
            panic!("arc_index called on {} spec", self.kind())
        };
        if modifier == 0 || modifier > len || head > len || head == modifier {
            return None;
        }
        if head == 0 {
            Some(modifier - 1)
        } else {
            let offset = if modifier > head { modifier - 2 } else { modifier - 1 };
            Some(len + (head - 1) * (len - 1) + offset)
        }
    }

    /// Inverse of [`FactorSpec::arc_index`].
    pub fn arc(&self, index: usize) -> (usize, usize) {
        let FactorSpec::Arborescence { len } = *self else {
            panic!("arc called on {} spec", self.kind())
        };
        if index < len {
            return (0, index + 1);
        }
        let rest = index - len;
        let head = rest / (len - 1) + 1;
        let offset = rest % (len - 1);
        let modifier = if offset + 1 >= head { offset + 2 } else { offset + 1 };
        (head, modifier)
    }

    pub fn pair_index(&self, row: usize, col: usize) -> usize {
        let FactorSpec::Matching { cols, .. } = *self else {
            panic!("pair_index called on {} spec", self.kind())
        };
        row * cols + col
    }
}

fn saturating_pow(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// Log-potentials `eta = [eta_U; eta_F]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub unary: Vec<f64>,
    pub factor: Vec<f64>,
}

impl Potentials {
    pub fn new(spec: &FactorSpec, unary: Vec<f64>, factor: Vec<f64>) -> Result<Self> {
        let pot = Potentials { unary, factor };
        pot.check(spec)?;
        Ok(pot)
    }

    pub fn zeros(spec: &FactorSpec) -> Self {
        Potentials {
            unary: vec![0.0; spec.unary_dim()],
            factor: vec![0.0; spec.factor_dim()],
        }
    }

    /// Sequence potentials with one `m x m` transition matrix (row-major,
    /// `transition[a*m + b]` scores `a -> b`) shared by every interior position.
    pub fn tied_sequence(
        spec: &FactorSpec,
        unary: Vec<f64>,
        transition: &[f64],
        start: &[f64],
        end: &[f64],
    ) -> Result<Self> {
        let FactorSpec::Sequence { len, tags } = *spec else {
            return Err(Error::KindMismatch {
                expected: spec.kind(),
                found: Kind::Sequence,
            });
        };
        expect_len("tied transition matrix", tags * tags, transition.len())?;
        expect_len("start scores", tags, start.len())?;
        expect_len("end scores", tags, end.len())?;
        let mut factor = Vec::with_capacity(spec.factor_dim());
        for _ in 1..len {
            factor.extend_from_slice(transition);
        }
        factor.extend_from_slice(start);
        factor.extend_from_slice(end);
        Self::new(spec, unary, factor)
    }

    pub fn check(&self, spec: &FactorSpec) -> Result<()> {
        expect_len("unary potentials", spec.unary_dim(), self.unary.len())?;
        expect_len("factor potentials", spec.factor_dim(), self.factor.len())?;
        if let Some(index) = self.unary.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "unary potentials", index });
        }
        if let Some(index) = self.factor.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "factor potentials", index });
        }
        Ok(())
    }

    /// `(eta_U - u, eta_F)`: the scores that make MAP inference solve the
    /// linearized SparseMAP subproblem at `u`.
    pub fn adjusted(&self, u: &[f64]) -> Potentials {
        self.adjusted_scaled(u, 1.0)
    }

    /// `(eta_U - scale * u, eta_F)`.
    pub fn adjusted_scaled(&self, u: &[f64], scale: f64) -> Potentials {
        debug_assert_eq!(u.len(), self.unary.len());
        Potentials {
            unary: self.unary.iter().zip(u).map(|(e, x)| e - scale * x).collect(),
            factor: self.factor.clone(),
        }
    }

    /// Returns `eta * factor`.
    pub fn scaled(&self, factor: f64) -> Potentials {
        Potentials {
            unary: self.unary.iter().map(|x| x * factor).collect(),
            factor: self.factor.iter().map(|x| x * factor).collect(),
        }
    }

    /// `eta_U + offset` with the factor part untouched.
    pub fn with_unary_offset(&self, offset: &[f64]) -> Potentials {
        Potentials {
            unary: self.unary.iter().zip(offset).map(|(e, c)| e + c).collect(),
            factor: self.factor.clone(),
        }
    }

    /// `eta_U^T u + eta_F^T v`.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(&self.unary, u) + dot(&self.factor, v)
    }
}

pub(crate) fn expect_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kind-specific canonical encoding of a structure.
///
/// Orders lexicographically within a kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StructureId {
    /// Index of the selected coordinate.
    Dense(usize),
    /// Tag of each position.
    Sequence(Vec<usize>),
    /// Head of each word `1..=n`, with 0 the root.
    Arborescence(Vec<usize>),
    /// Column assigned to each row, `None` for rows left unmatched.
    Matching(Vec<Option<usize>>),
}

impl StructureId {
    pub fn kind(&self) -> Kind {
        match self {
            StructureId::Dense(_) => Kind::Dense,
            StructureId::Sequence(_) => Kind::Sequence,
            StructureId::Arborescence(_) => Kind::Arborescence,
            StructureId::Matching(_) => Kind::Matching,
        }
    }
}

/// A vertex `a_s = [m_s; n_s]` of the marginal polytope, stored as the sorted
/// indices of its nonzero (unit) coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructureColumn {
    id: StructureId,
    unary: Vec<usize>,
    factor: Vec<usize>,
}

impl StructureColumn {
    pub fn id(&self) -> &StructureId {
        &self.id
    }

    /// Sorted indices where `m_s` is 1.
    pub fn unary_indices(&self) -> &[usize] {
        &self.unary
    }

    /// Sorted indices where `n_s` is 1.
    pub fn factor_indices(&self) -> &[usize] {
        &self.factor
    }

    /// `m_s` as a dense 0/1 vector of length `k_unary`.
    pub fn unary_dense(&self, k_unary: usize) -> Vec<f64> {
        indicator(&self.unary, k_unary)
    }

    /// `n_s` as a dense 0/1 vector of length `k_factor`.
    pub fn factor_dense(&self, k_factor: usize) -> Vec<f64> {
        indicator(&self.factor, k_factor)
    }

    /// `||m_s||^2`.
    pub fn unary_norm_sq(&self) -> usize {
        self.unary.len()
    }

    /// `m_s^T m_t`: the number of shared unary coordinates.
    pub fn unary_overlap(&self, other: &StructureColumn) -> usize {
        sorted_intersection_len(&self.unary, &other.unary)
    }

    /// `theta_s = eta_U^T m_s + eta_F^T n_s`, assuming matching shapes.
    pub fn score(&self, pot: &Potentials) -> f64 {
        self.unary.iter().map(|&i| pot.unary[i]).sum::<f64>()
            + self.factor.iter().map(|&i| pot.factor[i]).sum::<f64>()
    }

    /// `x^T m_s`.
    pub fn unary_dot(&self, x: &[f64]) -> f64 {
        self.unary.iter().map(|&i| x[i]).sum()
    }

    /// `out += weight * m_s`.
    pub fn add_unary_to(&self, out: &mut [f64], weight: f64) {
        for &i in &self.unary {
            out[i] += weight;
        }
    }

    /// `out += weight * n_s`.
    pub fn add_factor_to(&self, out: &mut [f64], weight: f64) {
        for &i in &self.factor {
            out[i] += weight;
        }
    }
}

fn indicator(indices: &[usize], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for &i in indices {
        out[i] = 1.0;
    }
    out
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Builds the column `a_s` of a structure, validating the id.
pub fn structure_column(spec: &FactorSpec, id: &StructureId) -> Result<StructureColumn> {
    if id.kind() != spec.kind() {
        return Err(Error::KindMismatch {
            expected: spec.kind(),
            found: id.kind(),
        });
    }
    let encoding = |index: usize, reason: String| Error::Encoding { index, reason };
    let (mut unary, mut factor) = (Vec::new(), Vec::new());
    match (*spec, id) {
        (FactorSpec::Dense { d }, StructureId::Dense(k)) => {
            if *k >= d {
                return Err(encoding(*k, format!("index {k} out of range for d = {d}")));
            }
            unary.push(*k);
        }
        (FactorSpec::Sequence { len, tags }, StructureId::Sequence(path)) => {
            if path.len() != len {
                return Err(encoding(
                    path.len().min(len),
                    format!("expected {len} tags, got {}", path.len()),
                ));
            }
            if let Some(pos) = path.iter().position(|&t| t >= tags) {
                return Err(encoding(
                    pos,
                    format!("tag {} out of range for {tags} tags", path[pos]),
                ));
            }
            unary.extend(path.iter().enumerate().map(|(i, &t)| spec.seq_unary(i, t)));
            factor.extend((1..len).map(|i| spec.seq_transition(i, path[i - 1], path[i])));
            factor.push(spec.seq_start(path[0]));
            factor.push(spec.seq_end(path[len - 1]));
        }
        (FactorSpec::Arborescence { len }, StructureId::Arborescence(heads)) => {
            validate_heads(len, heads)?;
            unary.extend(
                heads
                    .iter()
                    .enumerate()
                    .map(|(i, &h)| spec.arc_index(h, i + 1).expect("validated arc")),
            );
        }
        (FactorSpec::Matching { rows, cols }, StructureId::Matching(assign)) => {
            validate_assignment(rows, cols, assign)?;
            unary.extend(
                assign
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| c.map(|j| spec.pair_index(i, j))),
            );
        }
        _ => unreachable!("kinds checked above"),
    }
    unary.sort_unstable();
    factor.sort_unstable();
    Ok(StructureColumn {
        id: id.clone(),
        unary,
        factor,
    })
}

fn validate_heads(len: usize, heads: &[usize]) -> Result<()> {
    if heads.len() != len {
        return Err(Error::Encoding {
            index: heads.len().min(len),
            reason: format!("expected {len} heads, got {}", heads.len()),
        });
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > len {
            return Err(Error::Encoding {
                index: i,
                reason: format!("head {h} out of range for {len} words"),
            });
        }
        if h == i + 1 {
            return Err(Error::Encoding {
                index: i,
                reason: format!("word {} is its own head", i + 1),
            });
        }
    }
    // every word must reach the root within `len` steps
    for start in 1..=len {
        let mut node = start;
        let mut steps = 0;
        while node != 0 {
            node = heads[node - 1];
            steps += 1;
            if steps > len {
                return Err(Error::Encoding {
                    index: start - 1,
                    reason: format!("word {start} lies on a cycle"),
                });
            }
        }
    }
    Ok(())
}

fn validate_assignment(rows: usize, cols: usize, assign: &[Option<usize>]) -> Result<()> {
    if assign.len() != rows {
        return Err(Error::Encoding {
            index: assign.len().min(rows),
            reason: format!("expected {rows} entries, got {}", assign.len()),
        });
    }
    let mut used = vec![false; cols];
    for (i, c) in assign.iter().enumerate() {
        if let Some(j) = *c {
            if j >= cols {
                return Err(Error::Encoding {
                    index: i,
                    reason: format!("column {j} out of range for {cols} columns"),
                });
            }
            if used[j] {
                return Err(Error::Encoding {
                    index: i,
                    reason: format!("column {j} assigned twice"),
                });
            }
            used[j] = true;
        }
    }
    let matched = assign.iter().filter(|c| c.is_some()).count();
    if matched != rows.min(cols) {
        let index = assign.iter().position(|c| c.is_none()).unwrap_or(0);
        return Err(Error::Encoding {
            index,
            reason: format!("{matched} pairs matched, expected {}", rows.min(cols)),
        });
    }
    Ok(())
}

/// `theta_s = eta_U^T m_s + eta_F^T n_s`, with shape checks.
pub fn score_structure(
    spec: &FactorSpec,
    pot: &Potentials,
    column: &StructureColumn,
) -> Result<f64> {
    expect_len("unary potentials", spec.unary_dim(), pot.unary.len())?;
    expect_len("factor potentials", spec.factor_dim(), pot.factor.len())?;
    if column.id.kind() != spec.kind() {
        return Err(Error::KindMismatch {
            expected: spec.kind(),
            found: column.id.kind(),
        });
    }
    Ok(column.score(pot))
}

/// Recovers the structure id from a dense unary indicator `m`.
pub fn decode_structure(spec: &FactorSpec, m: &[f64]) -> Result<StructureId> {
    expect_len("unary indicator", spec.unary_dim(), m.len())?;
    let on = |i: usize| m[i] > 0.5;
    let id = match *spec {
        FactorSpec::Dense { d } => {
            let hits: Vec<_> = (0..d).filter(|&i| on(i)).collect();
            match hits[..] {
                [k] => StructureId::Dense(k),
                _ => {
                    return Err(Error::Encoding {
                        index: 0,
                        reason: format!("expected exactly one active coordinate, got {}", hits.len()),
                    })
                }
            }
        }
        FactorSpec::Sequence { len, tags } => {
            let mut path = Vec::with_capacity(len);
            for pos in 0..len {
                let hits: Vec<_> = (0..tags).filter(|&t| on(spec.seq_unary(pos, t))).collect();
                match hits[..] {
                    [t] => path.push(t),
                    _ => {
                        return Err(Error::Encoding {
                            index: pos,
                            reason: format!("position {pos} has {} active tags", hits.len()),
                        })
                    }
                }
            }
            StructureId::Sequence(path)
        }
        FactorSpec::Arborescence { len } => {
            let mut heads = Vec::with_capacity(len);
            for modifier in 1..=len {
                let hits: Vec<_> = (0..=len)
                    .filter(|&h| spec.arc_index(h, modifier).is_some_and(on))
                    .collect();
                match hits[..] {
                    [h] => heads.push(h),
                    _ => {
                        return Err(Error::Encoding {
                            index: modifier - 1,
                            reason: format!("word {modifier} has {} heads", hits.len()),
                        })
                    }
                }
            }
            StructureId::Arborescence(heads)
        }
        FactorSpec::Matching { rows, cols } => {
            let mut assign = Vec::with_capacity(rows);
            for i in 0..rows {
                let hits: Vec<_> = (0..cols).filter(|&j| on(spec.pair_index(i, j))).collect();
                match hits[..] {
                    [] => assign.push(None),
                    [j] => assign.push(Some(j)),
                    _ => {
                        return Err(Error::Encoding {
                            index: i,
                            reason: format!("row {i} matched {} times", hits.len()),
                        })
                    }
                }
            }
            StructureId::Matching(assign)
        }
    };
    structure_column(spec, &id)?;
    Ok(id)
}

/// Lists every structure of `spec` in lexicographic id order, refusing when
/// the count exceeds [`DEFAULT_ENUMERATION_CAP`].
pub fn enumerate_structures(spec: &FactorSpec) -> Result<Vec<StructureColumn>> {
    enumerate_structures_capped(spec, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_structures_capped(spec: &FactorSpec, cap: u128) -> Result<Vec<StructureColumn>> {
    let count = spec.structure_count();
    if count > cap {
        return Err(Error::TooManyStructures { count, cap });
    }
    let ids: Vec<StructureId> = match *spec {
        FactorSpec::Dense { d } => (0..d).map(StructureId::Dense).collect(),
        FactorSpec::Sequence { len, tags } => odometer(len, tags)
            .map(StructureId::Sequence)
            .collect(),
        FactorSpec::Arborescence { len } => odometer(len, len + 1)
            .filter(|heads| validate_heads(len, heads).is_ok())
            .map(StructureId::Arborescence)
            .collect(),
        FactorSpec::Matching { rows, cols } => {
            let mut out = Vec::new();
            let mut current = Vec::with_capacity(rows);
            let mut used = vec![false; cols];
            enumerate_assignments(rows, cols, &mut current, &mut used, &mut out);
            out.into_iter().map(StructureId::Matching).collect()
        }
    };
    ids.iter().map(|id| structure_column(spec, id)).collect()
}

/// All length-`len` digit strings over `0..base`, lexicographically.
fn odometer(len: usize, base: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = Some(vec![0; len]);
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        let mut pos = len;
        while pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < base {
                next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    })
}

fn enumerate_assignments(
    rows: usize,
    cols: usize,
    current: &mut Vec<Option<usize>>,
    used: &mut [bool],
    out: &mut Vec<Vec<Option<usize>>>,
) {
    let row = current.len();
    if row == rows {
        if current.iter().filter(|c| c.is_some()).count() == rows.min(cols) {
            out.push(current.clone());
        }
        return;
    }
    let matched = current.iter().filter(|c| c.is_some()).count();
    // leaving this row unmatched is only possible when rows outnumber columns
    if rows - row > rows.min(cols) - matched {
        current.push(None);
        enumerate_assignments(rows, cols, current, used, out);
        current.pop();
    }
    if matched < rows.min(cols) {
        for j in 0..cols {
            if !used[j] {
                used[j] = true;
                current.push(Some(j));
                enumerate_assignments(rows, cols, current, used, out);
                current.pop();
                used[j] = false;
            }
        }
    }
}
