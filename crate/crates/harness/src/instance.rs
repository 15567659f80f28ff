//! JSON-lines instance files.
//!
//! One object per line:
//!
//! ```text
//! {"kind": "sequence", "dims": [3, 2], "eta_U": [...], "eta_F": [...]}
//! {"kind": "sequence", "dims": [3, 2], "eta_U": [...],
//!  "eta_F": {"transition": [[..], [..]], "start": [..], "end": [..]}}
//! ```
//!
//! `eta_F` may be omitted for kinds without factor potentials. Blank lines
//! are skipped; line numbers in errors are 1-based.

use serde::{Deserialize, Serialize};
use serde_json::json;
use sparsemap::{FactorSpec, Kind, Potentials};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spec: FactorSpec,
    pub potentials: Potentials,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct InstanceError {
    pub line: usize,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    kind: Kind,
    dims: Vec<usize>,
    #[serde(rename = "eta_U")]
    eta_u: Vec<f64>,
    #[serde(rename = "eta_F", default)]
    eta_f: Option<RawFactor>,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum RawFactor {
    Flat(Vec<f64>),
    Tied {
        transition: Vec<Vec<f64>>,
        start: Vec<f64>,
        end: Vec<f64>,
    },
}

fn build(raw: RawInstance) -> sparsemap::Result<Instance> {
    let spec = FactorSpec::from_dims(raw.kind, &raw.dims)?;
    let potentials = match raw.eta_f {
        None => Potentials::new(&spec, raw.eta_u, Vec::new())?,
        Some(RawFactor::Flat(f)) => Potentials::new(&spec, raw.eta_u, f)?,
        Some(RawFactor::Tied { transition, start, end }) => {
            let m = match spec {
                FactorSpec::Sequence { tags, .. } => tags,
                _ => {
                    return Err(sparsemap::Error::KindMismatch {
                        expected: Kind::Sequence,
                        found: spec.kind(),
                    })
                }
            };
            if let Some(bad) = transition.iter().position(|row| row.len() != m) {
                return Err(sparsemap::Error::DimensionMismatch {
                    what: "tied transition row",
                    expected: m,
                    got: transition[bad].len(),
                });
            }
            let flat: Vec<f64> = transition.concat();
            Potentials::tied_sequence(&spec, raw.eta_u, &flat, &start, &end)?
        }
    };
    Ok(Instance { spec, potentials })
}

pub fn parse_line(line: &str) -> Result<Instance, String> {
    let raw: RawInstance = serde_json::from_str(line).map_err(|e| e.to_string())?;
    build(raw).map_err(|e| e.to_string())
}

/// Parses every non-blank line, stopping at the first bad one.
pub fn parse_instances(text: &str) -> Result<Vec<Instance>, InstanceError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| parse_line(line).map_err(|message| InstanceError { line: i + 1, message }))
        .collect()
}

/// The one-line encoding of `instance` with flat `eta_F`.
pub fn to_json_line(instance: &Instance) -> String {
    json!({
        "kind": instance.spec.kind(),
        "dims": instance.spec.dims(),
        "eta_U": instance.potentials.unary,
        "eta_F": instance.potentials.factor,
    })
    .to_string()
}
