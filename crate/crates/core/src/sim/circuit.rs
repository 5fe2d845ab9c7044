use serde::{Deserialize, Serialize};

use super::gate::{with_control, GateKind, GateOp};
use crate::error::{Error, Result};

pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

/// Ordered gate list over `num_qubits` wires with an optional measured qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
    measured_qubit: Option<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("a circuit needs at least one qubit".into()));
        }
        Ok(Circuit {
            num_qubits,
            ops: Vec::new(),
            measured_qubit: None,
        })
    }

    pub fn from_ops(num_qubits: usize, ops: Vec<GateOp>, measured_qubit: Option<usize>) -> Result<Self> {
        let mut c = Circuit::new(num_qubits)?;
        c.set_measured_qubit(measured_qubit)?;
        for op in ops {
            c.push(op)?;
        }
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn into_ops(self) -> Vec<GateOp> {
        self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn measured_qubit(&self) -> Option<usize> {
        self.measured_qubit
    }

    pub fn set_measured_qubit(&mut self, qubit: Option<usize>) -> Result<()> {
        if let Some(q) = qubit {
            self.check_qubit(q)?;
        }
        self.measured_qubit = qubit;
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        op.validate()?;
        for q in op.qubits() {
            self.check_qubit(q)?;
        }
        self.ops.push(op);
        Ok(self)
    }

    fn push_new(&mut self, kind: GateKind, targets: Vec<usize>, controls: Vec<usize>, params: Vec<f64>) -> Result<&mut Self> {
        self.push(GateOp {
            kind,
            targets,
            controls,
            params,
        })
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.push_new(GateKind::H, vec![q], vec![], vec![])
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.push_new(GateKind::X, vec![q], vec![], vec![])
    }

    pub fn rx(&mut self, q: usize, theta: f64) -> Result<&mut Self> {
        self.push_new(GateKind::RX, vec![q], vec![], vec![theta])
    }

    pub fn ry(&mut self, q: usize, theta: f64) -> Result<&mut Self> {
        self.push_new(GateKind::RY, vec![q], vec![], vec![theta])
    }

    pub fn rz(&mut self, q: usize, theta: f64) -> Result<&mut Self> {
        self.push_new(GateKind::RZ, vec![q], vec![], vec![theta])
    }

    pub fn rot(&mut self, q: usize, phi: f64, theta: f64, omega: f64) -> Result<&mut Self> {
        self.push_new(GateKind::Rot, vec![q], vec![], vec![phi, theta, omega])
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push_new(GateKind::CNOT, vec![target], vec![control], vec![])
    }

    pub fn crz(&mut self, control: usize, target: usize, theta: f64) -> Result<&mut Self> {
        self.push_new(GateKind::CRZ, vec![target], vec![control], vec![theta])
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.push_new(GateKind::SWAP, vec![a, b], vec![], vec![])
    }

    pub fn ising(&mut self, kind: GateKind, a: usize, b: usize, theta: f64) -> Result<&mut Self> {
        if !matches!(kind, GateKind::IsingXX | GateKind::IsingYY | GateKind::IsingZZ) {
            return Err(Error::InvalidArgument(format!("{kind:?} is not an Ising gate")));
        }
        self.push_new(kind, vec![a, b], vec![], vec![theta])
    }

    /// Appends every op of `other`; widths must match.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    /// Same ops on a circuit with more wires.
    pub fn widened(&self, num_qubits: usize) -> Result<Circuit> {
        if num_qubits < self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                got: num_qubits,
            });
        }
        Ok(Circuit {
            num_qubits,
            ops: self.ops.clone(),
            measured_qubit: self.measured_qubit,
        })
    }

    /// Every op lifted with an extra control qubit.
    pub fn controlled_by(&self, control: usize) -> Result<Circuit> {
        let mut out = Circuit::new(self.num_qubits.max(control + 1))?;
        out.measured_qubit = self.measured_qubit;
        for op in &self.ops {
            out.push(with_control(op, control)?)?;
        }
        Ok(out)
    }

    pub fn parameter_count(&self) -> usize {
        self.ops.iter().map(|op| op.params.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CircuitFile::from(self)).expect("circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let file: CircuitFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// Reversed op order with every op inverted.
pub fn adjoint(circuit: &Circuit) -> Circuit {
    Circuit {
        num_qubits: circuit.num_qubits,
        ops: circuit.ops.iter().rev().map(GateOp::inverse).collect(),
        measured_qubit: circuit.measured_qubit,
    }
}

/// On-disk form of a [`Circuit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub schema_version: u32,
    pub num_qubits: usize,
    pub measured_qubit: Option<usize>,
    pub ops: Vec<GateOp>,
}

impl From<&Circuit> for CircuitFile {
    fn from(c: &Circuit) -> Self {
        CircuitFile {
            schema_version: CIRCUIT_SCHEMA_VERSION,
            num_qubits: c.num_qubits,
            measured_qubit: c.measured_qubit,
            ops: c.ops.clone(),
        }
    }
}

impl TryFrom<CircuitFile> for Circuit {
    type Error = Error;

    fn try_from(file: CircuitFile) -> Result<Circuit> {
        if file.schema_version != CIRCUIT_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(file.schema_version));
        }
        Circuit::from_ops(file.num_qubits, file.ops, file.measured_qubit)
    }
}
