use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::device::DeviceModel;
use super::gate::{Gate, ParamRole};
use crate::error::{Error, Result};

/// An ordered gate list over logical qubits, the measured qubits, and the
/// logical→physical mapping chosen at generation time.
///
/// Immutable once built. Measured qubit `measured[k]` is read out as bit `k`
/// of an outcome index (little-endian), in every simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
    mapping: Vec<usize>,
    n_trainable: usize,
    n_embedding: usize,
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    n_qubits: usize,
    mapping: Vec<usize>,
    gates: Vec<Gate>,
    measured: Vec<usize>,
}

impl TryFrom<CircuitFile> for Circuit {
    type Error = Error;
    fn try_from(f: CircuitFile) -> Result<Self> {
        Circuit::new(f.n_qubits, f.gates, f.measured, f.mapping)
    }
}

impl From<Circuit> for CircuitFile {
    fn from(c: Circuit) -> Self {
        CircuitFile {
            n_qubits: c.n_qubits,
            mapping: c.mapping,
            gates: c.gates,
            measured: c.measured,
        }
    }
}

impl Circuit {
    /// Builds a circuit. An empty `mapping` means the identity mapping.
    ///
    /// Structural problems (bad arity, out-of-range qubits, empty or repeated
    /// measured qubits) are errors here; device-relative problems are reported
    /// by [`validate_circuit`].
    pub fn new(
        n_qubits: usize,
        gates: Vec<Gate>,
        measured: Vec<usize>,
        mapping: Vec<usize>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidCircuit("circuit has no qubits".into()));
        }
        for (i, g) in gates.iter().enumerate() {
            g.check()?;
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {i} acts on qubit {q}, circuit has {n_qubits}"
                )));
            }
        }
        if measured.is_empty() {
            return Err(Error::EmptyMeasurement);
        }
        let mut seen = BTreeSet::new();
        for &q in &measured {
            if q >= n_qubits || !seen.insert(q) {
                return Err(Error::InvalidCircuit(format!(
                    "measured set {measured:?} is not a set of qubits below {n_qubits}"
                )));
            }
        }
        let mapping = if mapping.is_empty() {
            (0..n_qubits).collect()
        } else {
            mapping
        };
        if mapping.len() != n_qubits {
            return Err(Error::InvalidCircuit(format!(
                "mapping has {} entries for {n_qubits} qubits",
                mapping.len()
            )));
        }
        let n_trainable = gates
            .iter()
            .filter_map(|g| match g.role {
                ParamRole::Trainable(k) => Some(k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let n_embedding = gates
            .iter()
            .filter(|g| matches!(g.role, ParamRole::Embedding(_)))
            .count();
        Ok(Circuit {
            n_qubits,
            gates,
            measured,
            mapping,
            n_trainable,
            n_embedding,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
    pub fn measured(&self) -> &[usize] {
        &self.measured
    }
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }
    /// Length of the trainable parameter vector (highest index + 1).
    pub fn n_trainable(&self) -> usize {
        self.n_trainable
    }
    /// Number of data-embedding gates.
    pub fn n_embedding(&self) -> usize {
        self.n_embedding
    }

    /// Smallest data dimension that covers every embedding gate.
    pub fn data_dim_needed(&self) -> usize {
        self.gates
            .iter()
            .filter_map(|g| match g.role {
                ParamRole::Embedding(d) => Some(d + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_clifford(&self) -> bool {
        self.gates.iter().all(|g| g.kind.is_clifford())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Copy of this circuit with a new gate list; qubits, measured set and
    /// mapping are kept.
    pub fn with_gates(&self, gates: Vec<Gate>) -> Result<Circuit> {
        Circuit::new(
            self.n_qubits,
            gates,
            self.measured.clone(),
            self.mapping.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Incremental construction of a [`Circuit`].
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    n_qubits: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
    mapping: Vec<usize>,
}

impl CircuitBuilder {
    pub fn new(n_qubits: usize) -> Self {
        CircuitBuilder {
            n_qubits,
            ..Default::default()
        }
    }

    pub fn gate(mut self, g: Gate) -> Self {
        self.gates.push(g);
        self
    }

    pub fn gates(mut self, gs: impl IntoIterator<Item = Gate>) -> Self {
        self.gates.extend(gs);
        self
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn measure(mut self, qubits: impl IntoIterator<Item = usize>) -> Self {
        self.measured = qubits.into_iter().collect();
        self
    }

    pub fn mapping(mut self, mapping: Vec<usize>) -> Self {
        self.mapping = mapping;
        self
    }

    /// Builds; measures every qubit if no measured set was given.
    pub fn build(self) -> Result<Circuit> {
        let measured = if self.measured.is_empty() {
            (0..self.n_qubits).collect()
        } else {
            self.measured
        };
        Circuit::new(self.n_qubits, self.gates, measured, self.mapping)
    }
}

/// A device-relative problem with a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A two-qubit gate whose physical qubits are not coupled.
    NonAdjacent {
        gate: usize,
        physical: (usize, usize),
    },
    /// A mapping entry outside the device or used twice.
    BadMapping { logical: usize, physical: usize },
    /// Trainable indices skip this value.
    IndexGap { missing: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonAdjacent { gate, physical } => write!(
                f,
                "non-adjacent 2q gate: gate {gate} on physical qubits {physical:?}"
            ),
            Violation::BadMapping { logical, physical } => write!(
                f,
                "bad mapping: logical qubit {logical} -> physical {physical}"
            ),
            Violation::IndexGap { missing } => {
                write!(f, "index gap: trainable index {missing} unused")
            }
        }
    }
}

/// Lists every invariant violation of `c` relative to `dev`. Empty means valid.
pub fn validate_circuit(c: &Circuit, dev: &DeviceModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut used = BTreeSet::new();
    for (logical, &physical) in c.mapping().iter().enumerate() {
        if physical >= dev.n_qubits() || !used.insert(physical) {
            out.push(Violation::BadMapping { logical, physical });
        }
    }
    for (i, g) in c.gates().iter().enumerate() {
        if g.is_two_qubit() {
            let a = c.mapping()[g.qubits[0]];
            let b = c.mapping()[g.qubits[1]];
            if !dev.has_edge(a, b) {
                out.push(Violation::NonAdjacent {
                    gate: i,
                    physical: (a, b),
                });
            }
        }
    }
    let indices: BTreeSet<usize> = c
        .gates()
        .iter()
        .filter_map(|g| match g.role {
            ParamRole::Trainable(k) => Some(k),
            _ => None,
        })
        .collect();
    for missing in (0..c.n_trainable()).filter(|k| !indices.contains(k)) {
        out.push(Violation::IndexGap { missing });
    }
    out
}
