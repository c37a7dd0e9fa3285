use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout_fidelity: f64,
    pub err_1q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCalibration {
    pub q0: usize,
    pub q1: usize,
    pub gate_fidelity: f64,
}

/// Qubit connectivity graph annotated with calibration data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeviceFile", into = "DeviceFile")]
pub struct DeviceModel {
    name: String,
    qubits: Vec<QubitCalibration>,
    edges: Vec<EdgeCalibration>,
    neighbors: Vec<Vec<usize>>,
    edge_lookup: BTreeMap<(usize, usize), usize>,
}

#[derive(Serialize, Deserialize)]
struct DeviceFile {
    name: String,
    n_qubits: usize,
    qubits: Vec<QubitCalibration>,
    edges: Vec<EdgeCalibration>,
}

impl TryFrom<DeviceFile> for DeviceModel {
    type Error = Error;
    fn try_from(f: DeviceFile) -> Result<Self> {
        if f.qubits.len() != f.n_qubits {
            return Err(Error::InvalidDevice(format!(
                "n_qubits is {} but {} qubit records given",
                f.n_qubits,
                f.qubits.len()
            )));
        }
        DeviceModel::new(f.name, f.qubits, f.edges)
    }
}

impl From<DeviceModel> for DeviceFile {
    fn from(d: DeviceModel) -> Self {
        DeviceFile {
            name: d.name,
            n_qubits: d.qubits.len(),
            qubits: d.qubits,
            edges: d.edges,
        }
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl DeviceModel {
    pub fn new(
        name: impl Into<String>,
        qubits: Vec<QubitCalibration>,
        edges: Vec<EdgeCalibration>,
    ) -> Result<Self> {
        let n = qubits.len();
        if n == 0 {
            return Err(Error::InvalidDevice("device has no qubits".into()));
        }
        for (i, q) in qubits.iter().enumerate() {
            if !(q.t1_us > 0.0 && q.t2_us > 0.0) {
                return Err(Error::InvalidDevice(format!(
                    "qubit {i}: T1 and T2 must be positive"
                )));
            }
            if !unit(q.readout_fidelity) || !unit(q.err_1q) {
                return Err(Error::InvalidDevice(format!(
                    "qubit {i}: readout_fidelity and err_1q must lie in [0, 1]"
                )));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut edge_lookup = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            if e.q0 >= n || e.q1 >= n || e.q0 == e.q1 {
                return Err(Error::InvalidDevice(format!(
                    "edge {i} ({}, {}) is not a pair of distinct device qubits",
                    e.q0, e.q1
                )));
            }
            if !unit(e.gate_fidelity) {
                return Err(Error::InvalidDevice(format!(
                    "edge {i}: gate_fidelity must lie in [0, 1]"
                )));
            }
            let key = (e.q0.min(e.q1), e.q0.max(e.q1));
            if edge_lookup.insert(key, i).is_some() {
                return Err(Error::InvalidDevice(format!("duplicate edge {key:?}")));
            }
            neighbors[e.q0].push(e.q1);
            neighbors[e.q1].push(e.q0);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(DeviceModel {
            name: name.into(),
            qubits,
            edges,
            neighbors,
            edge_lookup,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }
    pub fn qubits(&self) -> &[QubitCalibration] {
        &self.qubits
    }
    pub fn qubit(&self, q: usize) -> &QubitCalibration {
        &self.qubits[q]
    }
    pub fn edges(&self) -> &[EdgeCalibration] {
        &self.edges
    }
    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_lookup.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&EdgeCalibration> {
        self.edge_lookup
            .get(&(a.min(b), a.max(b)))
            .map(|&i| &self.edges[i])
    }

    /// Largest connected component size.
    pub fn largest_component(&self) -> usize {
        let n = self.n_qubits();
        let mut seen = vec![false; n];
        let mut best = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut size = 0;
            while let Some(q) = stack.pop() {
                size += 1;
                for &nb in &self.neighbors[q] {
                    if !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
            best = best.max(size);
        }
        best
    }

    /// Copy with every error rate (1q error, readout error, 2q error)
    /// multiplied by `factor`, clamped to [0, 1].
    pub fn scale_errors(&self, factor: f64) -> DeviceModel {
        let scale = |err: f64| (err * factor).clamp(0.0, 1.0);
        let qubits = self
            .qubits
            .iter()
            .map(|q| QubitCalibration {
                readout_fidelity: 1.0 - scale(1.0 - q.readout_fidelity),
                err_1q: scale(q.err_1q),
                ..q.clone()
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeCalibration {
                gate_fidelity: 1.0 - scale(1.0 - e.gate_fidelity),
                ..e.clone()
            })
            .collect();
        DeviceModel::new(format!("{}x{factor}", self.name), qubits, edges)
            .expect("scaling keeps calibration valid")
    }

    /// A device with perfect gates and readout.
    pub fn noiseless(topology: Topology) -> DeviceModel {
        let (n, pairs) = topology.pairs();
        let qubits = vec![
            QubitCalibration {
                t1_us: 100.0,
                t2_us: 100.0,
                readout_fidelity: 1.0,
                err_1q: 0.0,
            };
            n
        ];
        let edges = pairs
            .into_iter()
            .map(|(q0, q1)| EdgeCalibration {
                q0,
                q1,
                gate_fidelity: 1.0,
            })
            .collect();
        DeviceModel::new(format!("noiseless-{}", topology.label()), qubits, edges)
            .expect("topology builders produce valid graphs")
    }

    /// A device whose calibration values scatter log-uniformly around the
    /// given medians.
    pub fn synthetic(topology: Topology, cal: &SyntheticCalibration, seed: u64) -> DeviceModel {
        let mut rng = rng_from(seed);
        let spread = cal.spread.max(1.0).ln();
        let mut jitter = move |base: f64| {
            let f: f64 = if spread > 0.0 {
                rng.random_range(-spread..=spread)
            } else {
                0.0
            };
            base * f.exp()
        };
        let (n, pairs) = topology.pairs();
        let qubits = (0..n)
            .map(|_| QubitCalibration {
                t1_us: jitter(cal.t1_us),
                t2_us: jitter(cal.t2_us),
                readout_fidelity: 1.0 - jitter(cal.readout_error).min(1.0),
                err_1q: jitter(cal.err_1q).min(1.0),
            })
            .collect();
        let edges = pairs
            .into_iter()
            .map(|(q0, q1)| EdgeCalibration {
                q0,
                q1,
                gate_fidelity: 1.0 - jitter(cal.err_2q).min(1.0),
            })
            .collect();
        DeviceModel::new(
            format!("synthetic-{}-{seed}", topology.label()),
            qubits,
            edges,
        )
        .expect("synthetic calibration is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<DeviceModel> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Median error magnitudes for [`DeviceModel::synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCalibration {
    pub readout_error: f64,
    pub err_1q: f64,
    pub err_2q: f64,
    pub t1_us: f64,
    pub t2_us: f64,
    /// Multiplicative spread: values fall in [median / spread, median * spread].
    pub spread: f64,
}

impl Default for SyntheticCalibration {
    /// Magnitudes typical of current superconducting devices.
    fn default() -> Self {
        SyntheticCalibration {
            readout_error: 2e-2,
            err_1q: 2.5e-4,
            err_2q: 1e-2,
            t1_us: 100.0,
            t2_us: 80.0,
            spread: 3.0,
        }
    }
}

/// Coupling-graph shapes for synthetic devices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Line(usize),
    Ring(usize),
    Grid { rows: usize, cols: usize },
    /// The 7-qubit H-shaped layout of small heavy-hex chips.
    HeavyHex7,
    Custom { n: usize, edges: Vec<(usize, usize)> },
}

impl Topology {
    fn pairs(&self) -> (usize, Vec<(usize, usize)>) {
        match self {
            Topology::Line(n) => (*n, (1..*n).map(|i| (i - 1, i)).collect()),
            Topology::Ring(n) => {
                let mut p: Vec<_> = (1..*n).map(|i| (i - 1, i)).collect();
                if *n > 2 {
                    p.push((0, n - 1));
                }
                (*n, p)
            }
            Topology::Grid { rows, cols } => {
                let idx = |r: usize, c: usize| r * cols + c;
                let mut p = Vec::new();
                for r in 0..*rows {
                    for c in 0..*cols {
                        if c + 1 < *cols {
                            p.push((idx(r, c), idx(r, c + 1)));
                        }
                        if r + 1 < *rows {
                            p.push((idx(r, c), idx(r + 1, c)));
                        }
                    }
                }
                (rows * cols, p)
            }
            Topology::HeavyHex7 => (7, vec![(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)]),
            Topology::Custom { n, edges } => (*n, edges.clone()),
        }
    }

    fn label(&self) -> String {
        match self {
            Topology::Line(n) => format!("line{n}"),
            Topology::Ring(n) => format!("ring{n}"),
            Topology::Grid { rows, cols } => format!("grid{rows}x{cols}"),
            Topology::HeavyHex7 => "heavyhex7".into(),
            Topology::Custom { n, .. } => format!("custom{n}"),
        }
    }
}
