use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate vocabulary. Generated circuits use the rotations and the two-qubit
/// entanglers; Clifford replicas add `H`, `S` and the Paulis; `U3` only
/// appears in randomized-measurement basis changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    H,
    S,
    X,
    Y,
    Z,
    U3,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz => 2,
            _ => 1,
        }
    }

    /// Single-angle rotations whose angle can be bound to data or parameters.
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn is_clifford(self) -> bool {
        !matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::U3)
    }

    /// Number of fixed angles the gate carries when its role is `Fixed`.
    fn fixed_angles(self) -> &'static [usize] {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => &[1],
            GateKind::U3 => &[3],
            _ => &[0],
        }
    }
}

/// Where a gate's rotation angle comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", content = "value", rename_all = "lowercase")]
pub enum ParamRole {
    /// Index into the trainable parameter vector.
    Trainable(usize),
    /// Index into the input data vector; the raw feature is the angle.
    Embedding(usize),
    /// Constant angles (empty for non-parametric gates).
    Fixed(Vec<f64>),
}

impl ParamRole {
    pub fn trainable_index(&self) -> Option<usize> {
        match self {
            ParamRole::Trainable(i) => Some(*i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(flatten)]
    pub role: ParamRole,
}

impl Gate {
    /// Builds a gate, checking arity and role invariants.
    pub fn new(kind: GateKind, qubits: Vec<usize>, role: ParamRole) -> Result<Self> {
        let gate = Gate { kind, qubits, role };
        gate.check()?;
        Ok(gate)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{:?} acts on {} qubits, got {:?}",
                self.kind,
                self.kind.arity(),
                self.qubits
            )));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{:?} needs two distinct qubits, got {:?}",
                self.kind, self.qubits
            )));
        }
        match &self.role {
            ParamRole::Trainable(_) | ParamRole::Embedding(_) if !self.kind.is_rotation() => {
                Err(Error::InvalidGate(format!(
                    "{:?} cannot carry a bound parameter",
                    self.kind
                )))
            }
            ParamRole::Fixed(angles) if !self.kind.fixed_angles().contains(&angles.len()) => {
                // Non-parametric kinds take no angles; rotations one; U3 three.
                Err(Error::InvalidGate(format!(
                    "{:?} takes {:?} fixed angles, got {}",
                    self.kind,
                    self.kind.fixed_angles(),
                    angles.len()
                )))
            }
            _ => Ok(()),
        }
    }

    fn fixed(kind: GateKind, qubits: Vec<usize>) -> Self {
        Gate {
            kind,
            qubits,
            role: ParamRole::Fixed(Vec::new()),
        }
    }

    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, vec![q])
    }
    pub fn s(q: usize) -> Self {
        Self::fixed(GateKind::S, vec![q])
    }
    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, vec![q])
    }
    pub fn y(q: usize) -> Self {
        Self::fixed(GateKind::Y, vec![q])
    }
    pub fn z(q: usize) -> Self {
        Self::fixed(GateKind::Z, vec![q])
    }
    pub fn cx(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::Cx, vec![control, target])
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self::fixed(GateKind::Cz, vec![a, b])
    }

    /// A rotation (`Rx`, `Ry`, `Rz`) on `q` with the given angle source.
    pub fn rotation(kind: GateKind, q: usize, role: ParamRole) -> Self {
        debug_assert!(kind.is_rotation());
        Gate {
            kind,
            qubits: vec![q],
            role,
        }
    }

    pub fn u3(q: usize, angles: [f64; 3]) -> Self {
        Gate {
            kind: GateKind::U3,
            qubits: vec![q],
            role: ParamRole::Fixed(angles.to_vec()),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self.role, ParamRole::Trainable(_) | ParamRole::Embedding(_))
    }
}
