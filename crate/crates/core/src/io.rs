//! Instance files and state snapshots.
//!
//! An instance file is TOML. The graph is given either explicitly,
//!
//! ```toml
//! n = 3
//! edges = [[0, 1], [1, 2], [2, 0]]
//! alpha = [2, 1, 1]
//! beta = 1
//! lambda = 1.0
//! ```
//!
//! or by a generator table,
//!
//! ```toml
//! alpha = 45
//! beta = 50
//! lambda = { blocks = [0.5, 0.8] }
//!
//! [generator]
//! kind = "random_regular"   # complete | line | random_regular
//! n = 50
//! d = 10
//! seed = 7
//! ```
//!
//! `alpha`, `beta` and `lambda` accept a scalar (same value for every unit), an
//! array with one entry per unit, or `{ blocks = [...] }`, which splits the
//! units into equal consecutive groups. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::AllocationState;
use crate::topology::{build_complete, build_line, build_random_regular, Instance, Topology, UnitId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUnit<T> {
    One(T),
    Many(Vec<T>),
    Blocks { blocks: Vec<T> },
}

impl<T: Clone> PerUnit<T> {
    pub fn expand(&self, n: usize, field: &str) -> Result<Vec<T>> {
        match self {
            PerUnit::One(v) => Ok(vec![v.clone(); n]),
            PerUnit::Many(v) if v.len() == n => Ok(v.clone()),
            PerUnit::Many(v) => Err(Error::parse(field, format!("expected {n} entries, found {}", v.len()))),
            PerUnit::Blocks { blocks } => {
                let k = blocks.len();
                if k == 0 || !n.is_multiple_of(k) {
                    return Err(Error::parse(field, format!("{k} blocks do not split {n} units evenly")));
                }
                Ok(blocks.iter().flat_map(|v| std::iter::repeat_n(v.clone(), n / k)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Complete,
    Line,
    RandomRegular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<Topology> {
        match (self.kind, self.d) {
            (GeneratorKind::Complete, None) => build_complete(self.n),
            (GeneratorKind::Line, None) => build_line(self.n),
            (GeneratorKind::RandomRegular, Some(d)) => build_random_regular(self.n, d, self.seed.unwrap_or(0)),
            (GeneratorKind::RandomRegular, None) => Err(Error::parse("generator.d", "random_regular needs a degree")),
            (_, Some(_)) => Err(Error::parse("generator.d", "degree only applies to random_regular")),
        }
    }
}

/// Deserialized form of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[UnitId; 2]>>,
    pub alpha: PerUnit<u32>,
    pub beta: PerUnit<u32>,
    pub lambda: PerUnit<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        let topology = match (&self.generator, &self.edges) {
            (Some(_), Some(_)) => return Err(Error::parse("edges", "give either edges or a generator, not both")),
            (Some(g), None) => {
                if let Some(n) = self.n.filter(|&n| n != g.n) {
                    return Err(Error::parse("n", format!("n = {n} disagrees with generator.n = {}", g.n)));
                }
                g.build()?
            }
            (None, Some(edges)) => {
                let n = self.n.ok_or_else(|| Error::parse("n", "required with an explicit edge list"))?;
                Topology::from_edges(n, edges.iter().map(|e| (e[0], e[1])))
                    .map_err(|e| Error::parse("edges", e.to_string()))?
            }
            (None, None) => return Err(Error::parse("edges", "missing both edges and generator")),
        };
        let n = topology.len();
        let alpha = self.alpha.expand(n, "alpha")?;
        let beta = self.beta.expand(n, "beta")?;
        let lambda = self.lambda.expand(n, "lambda")?;
        Instance::new(topology, alpha, beta, lambda).map_err(|e| Error::parse("lambda", e.to_string()))
    }

    /// Explicit spec describing `inst`.
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceSpec {
            n: Some(inst.len()),
            edges: Some(inst.topology().edges().map(|(x, y)| [x, y]).collect()),
            alpha: PerUnit::Many(inst.alpha().to_vec()),
            beta: PerUnit::Many(inst.beta().to_vec()),
            lambda: PerUnit::Many(inst.lambda().to_vec()),
            generator: None,
        }
    }
}

/// Parses an instance from TOML text. Syntax errors carry line and column.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let spec: InstanceSpec = toml::from_str(text).map_err(|e| Error::parse("instance file", e.to_string()))?;
    spec.build()
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

/// Explicit TOML form of `inst`.
pub fn instance_to_toml(inst: &Instance) -> String {
    toml::to_string(&InstanceSpec::from_instance(inst)).expect("instance spec is always representable")
}

/// Hex SHA-256 of the canonical JSON encoding of the instance.
pub fn fingerprint(inst: &Instance) -> String {
    let bytes = serde_json::to_vec(inst).expect("instance serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A state together with the fingerprint of the instance it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub fingerprint: String,
    pub n: usize,
    pub entries: Vec<(UnitId, UnitId, u32)>,
}

impl Snapshot {
    pub fn capture(inst: &Instance, state: &AllocationState) -> Self {
        Snapshot {
            fingerprint: fingerprint(inst),
            n: inst.len(),
            entries: state.triples(),
        }
    }

    /// Rebuilds the state, refusing snapshots taken on another instance.
    pub fn restore(&self, inst: &Instance) -> Result<AllocationState> {
        if self.fingerprint != fingerprint(inst) {
            return Err(Error::InvalidState("snapshot belongs to a different instance".into()));
        }
        AllocationState::from_triples(inst, &self.entries)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("snapshot", e.to_string()))
    }
}
