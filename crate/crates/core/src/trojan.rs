//! Attack circuits and the splice that mounts them on a host.
//!
//! * Class A: `repetitions` pairs `U_i` then `U_i†`, each `U_i` a stack of
//!   `depth_d` identical ring blocks. The ideal unitary is the identity; on
//!   noisy hardware every gate still contributes error.
//! * Class B: Class A with every gate controlled on an ancilla, so it only
//!   runs once something flips the ancilla to |1⟩.
//! * Class C: a Hadamard on every data qubit, controlled on the ancilla,
//!   mounted right after the encoder.
//!
//! B and C end with a shield: two opposite CNOTs between the ancilla and a
//! data qubit, which keep the ancilla alive through idle-qubit elimination.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{adjoint, with_control, Circuit, GateKind, GateOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrojanClass {
    A,
    B,
    C,
}

impl TrojanClass {
    pub fn needs_ancilla(self) -> bool {
        !matches!(self, TrojanClass::A)
    }

    pub fn default_insertion(self) -> InsertionPoint {
        match self {
            TrojanClass::C => InsertionPoint::AfterEncoder,
            _ => InsertionPoint::BeforeMeasurement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionPoint {
    AfterEncoder,
    BeforeMeasurement,
}

fn default_repetitions() -> usize {
    50
}

fn default_depth() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrojanSpec {
    pub class: TrojanClass,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_depth")]
    pub depth_d: usize,
    #[serde(default)]
    pub ancilla: Option<usize>,
    #[serde(default)]
    pub param_seed: u64,
}

impl TrojanSpec {
    /// Defaults for a host with `n_qubits` data qubits; B and C get the
    /// appended wire `n_qubits` as ancilla.
    pub fn new(class: TrojanClass, n_qubits: usize, param_seed: u64) -> Self {
        TrojanSpec {
            class,
            repetitions: default_repetitions(),
            depth_d: default_depth(),
            ancilla: class.needs_ancilla().then_some(n_qubits),
            param_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 || self.depth_d == 0 {
            return Err(Error::InvalidArgument("repetitions and depth_d must be at least 1".into()));
        }
        match (self.class.needs_ancilla(), self.ancilla) {
            (false, Some(_)) => Err(Error::InvalidArgument("class A takes no ancilla".into())),
            (true, None) => Err(Error::InvalidArgument(format!("class {:?} needs an ancilla", self.class))),
            _ => Ok(()),
        }
    }
}

/// Angles `(φ, ω, θ)` for ring position `pos` of pair `pair`.
///
/// ChaCha stream = pair index, word position = ring position, so each draw
/// depends only on its coordinates.
pub fn ring_angles(param_seed: u64, pair: usize, pos: usize) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(param_seed);
    rng.set_stream(pair as u64);
    // three f64 draws consume six 32-bit words
    rng.set_word_pos(pos as u128 * 6);
    [0, 1, 2].map(|_| rng.gen::<f64>() * 2.0 * PI)
}

fn ring_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|q| (q, (q + 1) % n)).collect()
}

/// H on every qubit, then one ring each of CNOT, IsingXX(φ), IsingYY(ω),
/// IsingZZ(θ) and SWAP over the pairs `(q, q+1 mod n)`.
pub fn build_ui_block(n_qubits: usize, angles: &[[f64; 3]]) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("a ring block needs at least 2 qubits".into()));
    }
    if angles.len() != n_qubits {
        return Err(Error::DimensionMismatch {
            expected: n_qubits,
            got: angles.len(),
        });
    }
    let pairs = ring_pairs(n_qubits);
    let mut c = Circuit::new(n_qubits)?;
    for q in 0..n_qubits {
        c.h(q)?;
    }
    for &(a, b) in &pairs {
        c.cnot(a, b)?;
    }
    for (family, kind) in [GateKind::IsingXX, GateKind::IsingYY, GateKind::IsingZZ].into_iter().enumerate() {
        for (pos, &(a, b)) in pairs.iter().enumerate() {
            c.ising(kind, a, b, angles[pos][family])?;
        }
    }
    for &(a, b) in &pairs {
        c.swap(a, b)?;
    }
    Ok(c)
}

/// Body to splice into the host and shield to place last.
#[derive(Debug, Clone, PartialEq)]
pub struct TrojanCircuit {
    pub class: TrojanClass,
    pub body: Circuit,
    pub shield: Circuit,
}

impl TrojanCircuit {
    pub fn num_qubits(&self) -> usize {
        self.body.num_qubits()
    }

    /// Body followed by shield.
    pub fn to_circuit(&self) -> Circuit {
        let mut c = self.body.clone();
        c.append(&self.shield).expect("body and shield share a width");
        c
    }
}

fn class_a_body(n_qubits: usize, spec: &TrojanSpec) -> Result<Circuit> {
    let mut out = Circuit::new(n_qubits)?;
    for pair in 0..spec.repetitions {
        let angles: Vec<[f64; 3]> = (0..n_qubits).map(|pos| ring_angles(spec.param_seed, pair, pos)).collect();
        let block = build_ui_block(n_qubits, &angles)?;
        let mut u = Circuit::new(n_qubits)?;
        for _ in 0..spec.depth_d {
            u.append(&block)?;
        }
        out.append(&u)?;
        out.append(&adjoint(&u))?;
    }
    Ok(out)
}

fn expect_class(spec: &TrojanSpec, class: TrojanClass) -> Result<()> {
    spec.validate()?;
    if spec.class != class {
        return Err(Error::InvalidArgument(format!("expected a class {class:?} spec, got {:?}", spec.class)));
    }
    Ok(())
}

/// Noise injector on `n_qubits` wires.
pub fn build_class_a(n_qubits: usize, spec: &TrojanSpec) -> Result<TrojanCircuit> {
    expect_class(spec, TrojanClass::A)?;
    let body = class_a_body(n_qubits, spec)?;
    Ok(TrojanCircuit {
        class: TrojanClass::A,
        shield: Circuit::new(n_qubits)?,
        body,
    })
}

fn ancilla_of(n_qubits: usize, spec: &TrojanSpec) -> Result<usize> {
    let ancilla = spec.ancilla.expect("validated");
    if ancilla != n_qubits {
        return Err(Error::InvalidArgument(format!(
            "ancilla must be the appended wire {n_qubits}, got {ancilla}"
        )));
    }
    Ok(ancilla)
}

/// Qubit the shield ties the ancilla to: the last data qubit, so the
/// measured qubit 0 is never a shield target.
pub fn shield_anchor(n_qubits: usize) -> usize {
    n_qubits.saturating_sub(1)
}

/// Ancilla-controlled noise injector on `n_qubits + 1` wires.
pub fn build_class_b(n_qubits: usize, spec: &TrojanSpec) -> Result<TrojanCircuit> {
    expect_class(spec, TrojanClass::B)?;
    let ancilla = ancilla_of(n_qubits, spec)?;
    let body = class_a_body(n_qubits, spec)?.controlled_by(ancilla)?;
    let shield = build_trojan_shield(ancilla, shield_anchor(n_qubits), n_qubits + 1)?;
    Ok(TrojanCircuit {
        class: TrojanClass::B,
        body,
        shield,
    })
}

/// Ancilla-controlled H on every data qubit, on `n_qubits + 1` wires.
pub fn build_class_c(n_qubits: usize, spec: &TrojanSpec) -> Result<TrojanCircuit> {
    expect_class(spec, TrojanClass::C)?;
    let ancilla = ancilla_of(n_qubits, spec)?;
    let mut body = Circuit::new(n_qubits + 1)?;
    for q in 0..n_qubits {
        body.push(with_control(&GateOp::single(GateKind::H, q, vec![])?, ancilla)?)?;
    }
    let shield = build_trojan_shield(ancilla, shield_anchor(n_qubits), n_qubits + 1)?;
    Ok(TrojanCircuit {
        class: TrojanClass::C,
        body,
        shield,
    })
}

pub fn build_trojan(n_qubits: usize, spec: &TrojanSpec) -> Result<TrojanCircuit> {
    match spec.class {
        TrojanClass::A => build_class_a(n_qubits, spec),
        TrojanClass::B => build_class_b(n_qubits, spec),
        TrojanClass::C => build_class_c(n_qubits, spec),
    }
}

/// CNOT(ancilla → anchor) then CNOT(anchor → ancilla).
pub fn build_trojan_shield(ancilla: usize, anchor: usize, num_qubits: usize) -> Result<Circuit> {
    if ancilla == anchor {
        return Err(Error::DuplicateQubit { qubit: ancilla });
    }
    let mut c = Circuit::new(num_qubits)?;
    c.cnot(ancilla, anchor)?.cnot(anchor, ancilla)?;
    Ok(c)
}

/// Origin of an instruction in a lowered program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Prelude,
    Host,
    Trojan,
    Shield,
}

/// A circuit with a provenance tag per op.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedCircuit {
    pub circuit: Circuit,
    pub tags: Vec<Provenance>,
}

impl TaggedCircuit {
    pub fn count(&self, tag: Provenance) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }
}

impl From<Circuit> for TaggedCircuit {
    fn from(circuit: Circuit) -> Self {
        let tags = vec![Provenance::Host; circuit.len()];
        TaggedCircuit { circuit, tags }
    }
}

/// A circuit that can receive an implant, with the end of its encoder marked.
#[derive(Debug, Clone, PartialEq)]
pub struct Host {
    pub circuit: Circuit,
    pub encoder_end: usize,
}

impl Host {
    pub fn new(circuit: Circuit, encoder_end: usize) -> Result<Self> {
        if encoder_end > circuit.len() {
            return Err(Error::InvalidArgument(format!(
                "encoder end {encoder_end} past the last of {} ops",
                circuit.len()
            )));
        }
        Ok(Host { circuit, encoder_end })
    }
}

/// Splices the Trojan body into `host` at `point` and appends the shield.
pub fn implant(host: &Host, trojan: &TrojanCircuit, point: InsertionPoint) -> Result<TaggedCircuit> {
    let width = host.circuit.num_qubits();
    if trojan.num_qubits() > width {
        return Err(Error::DimensionMismatch {
            expected: width,
            got: trojan.num_qubits(),
        });
    }
    let host_ops = host.circuit.ops();
    let split = match point {
        InsertionPoint::AfterEncoder => host.encoder_end,
        InsertionPoint::BeforeMeasurement => host_ops.len(),
    };
    let mut circuit = Circuit::new(width)?;
    circuit.set_measured_qubit(host.circuit.measured_qubit())?;
    let mut tags = Vec::with_capacity(host_ops.len() + trojan.body.len() + trojan.shield.len());
    let segments: [(&[GateOp], Provenance); 4] = [
        (&host_ops[..split], Provenance::Host),
        (trojan.body.ops(), Provenance::Trojan),
        (&host_ops[split..], Provenance::Host),
        (trojan.shield.ops(), Provenance::Shield),
    ];
    for (ops, tag) in segments {
        for op in ops {
            circuit.push(op.clone())?;
            tags.push(tag);
        }
    }
    Ok(TaggedCircuit { circuit, tags })
}
