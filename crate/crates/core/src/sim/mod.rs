//! Gate-level circuit IR and exact ideal statevector simulation.
//!
//! Conventions: qubit 0 is the least significant bit of a basis index;
//! `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`, `RY(θ) = exp(−iθY/2)`,
//! `RX(θ) = exp(−iθX/2)`, `Rot(φ, θ, ω) = RZ(ω)·RY(θ)·RZ(φ)` and
//! `IsingPP(θ) = exp(−i(θ/2)·P⊗P)`. Global phase is never compared.

mod circuit;
mod gate;
pub(crate) mod kernel;
mod state;

pub use circuit::{adjoint, Circuit, CircuitFile, CIRCUIT_SCHEMA_VERSION};
pub use gate::{build_gate_matrix, with_control, GateKind, GateMatrix, GateOp};
pub use state::Statevector;

/// Runs `circuit` on |0…0⟩.
pub fn run(circuit: &Circuit) -> crate::Result<Statevector> {
    let mut s = Statevector::zero(circuit.num_qubits());
    s.apply_circuit(circuit)?;
    Ok(s)
}

/// Full unitary of `circuit` as columns `U|j⟩`, computed with the gate kernels.
pub fn unitary_columns(circuit: &Circuit) -> crate::Result<Vec<Statevector>> {
    (0..1usize << circuit.num_qubits())
        .map(|j| {
            let mut s = Statevector::basis(circuit.num_qubits(), j);
            s.apply_circuit(circuit)?;
            Ok(s)
        })
        .collect()
}
