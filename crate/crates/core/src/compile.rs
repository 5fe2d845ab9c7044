//! Toy compiler: device configuration files, optimization passes and
//! lowering to a flat instruction program.
//!
//! A configuration file may carry a `prelude` of parameterless gates that the
//! compiler emits before the circuit. A benign file has an empty prelude; an
//! attacker who can edit the file adds an X on the ancilla, which is the
//! trigger for the Class B and C Trojans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::sim::{self, Circuit, GateKind, GateOp, Statevector};
use crate::trojan::{Provenance, TaggedCircuit};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreludeGate {
    X,
    H,
}

impl PreludeGate {
    fn kind(self) -> GateKind {
        match self {
            PreludeGate::X => GateKind::X,
            PreludeGate::H => GateKind::H,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreludeInstruction {
    pub gate: PreludeGate,
    pub target: usize,
}

/// Parsed device configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub schema_version: u32,
    pub device_name: String,
    pub num_qubits: usize,
    pub noise: NoiseSpec,
    pub prelude: Vec<PreludeInstruction>,
}

impl DeviceConfig {
    /// Empty-prelude configuration with the given noise rates.
    pub fn benign(device_name: &str, num_qubits: usize, noise: NoiseSpec) -> Self {
        DeviceConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            device_name: device_name.to_owned(),
            num_qubits,
            noise,
            prelude: Vec::new(),
        }
    }

    /// Same device with an X on `target` prepended to every program.
    pub fn with_trigger(&self, target: usize) -> Result<Self> {
        let mut c = self.clone();
        c.prelude.push(PreludeInstruction {
            gate: PreludeGate::X,
            target,
        });
        c.validate()?;
        Ok(c)
    }

    pub fn is_benign(&self) -> bool {
        self.prelude.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(self.schema_version));
        }
        if self.num_qubits == 0 {
            return Err(Error::Schema("num_qubits must be positive".into()));
        }
        self.noise.validate().map_err(|e| Error::Schema(e.to_string()))?;
        if let Some(p) = self.prelude.iter().find(|p| p.target >= self.num_qubits) {
            return Err(Error::Schema(format!(
                "prelude target {} outside the {}-qubit device",
                p.target, self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// Parses and validates a configuration file. Unknown fields are rejected.
pub fn parse_config(bytes: &[u8]) -> Result<DeviceConfig> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Schema(format!("config is not UTF-8: {e}")))?;
    let config: DeviceConfig = serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::Schema(e.to_string())
        } else {
            Error::Json(e)
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// `old_to_new[q]` is the index of old qubit `q` after compaction, if kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitMap {
    pub old_to_new: Vec<Option<usize>>,
}

impl QubitMap {
    pub fn is_identity(&self) -> bool {
        self.old_to_new.iter().enumerate().all(|(i, m)| *m == Some(i))
    }

    pub fn removed(&self) -> Vec<usize> {
        (0..self.old_to_new.len()).filter(|&q| self.old_to_new[q].is_none()).collect()
    }
}

/// Drops qubits touched by no op and not measured, re-indexing the rest densely.
pub fn eliminate_idle_qubits(circuit: &Circuit) -> Result<(Circuit, QubitMap)> {
    let n = circuit.num_qubits();
    let mut used = vec![false; n];
    for q in circuit.ops().iter().flat_map(|op| op.qubits()) {
        used[q] = true;
    }
    if let Some(m) = circuit.measured_qubit() {
        used[m] = true;
    }
    if !used.iter().any(|&u| u) {
        // nothing to anchor on; keep a single wire
        used[0] = true;
    }
    let mut old_to_new = vec![None; n];
    let mut next = 0;
    for q in 0..n {
        if used[q] {
            old_to_new[q] = Some(next);
            next += 1;
        }
    }
    let map = QubitMap { old_to_new };
    if map.is_identity() {
        return Ok((circuit.clone(), map));
    }
    let relabel = |q: usize| map.old_to_new[q].expect("used qubit");
    let ops = circuit
        .ops()
        .iter()
        .map(|op| GateOp {
            kind: op.kind,
            targets: op.targets.iter().map(|&q| relabel(q)).collect(),
            controls: op.controls.iter().map(|&q| relabel(q)).collect(),
            params: op.params.clone(),
        })
        .collect();
    let out = Circuit::from_ops(next, ops, circuit.measured_qubit().map(relabel))?;
    Ok((out, map))
}

fn cancel_ops<T: Copy>(ops: &[GateOp], tags: &[T]) -> (Vec<GateOp>, Vec<T>) {
    let mut kept: Vec<(GateOp, T)> = Vec::with_capacity(ops.len());
    for (op, &tag) in ops.iter().zip(tags) {
        if kept.last().is_some_and(|(prev, _)| prev.is_inverse_of(op)) {
            kept.pop();
        } else {
            kept.push((op.clone(), tag));
        }
    }
    kept.into_iter().unzip()
}

/// Removes adjacent exact-inverse pairs until none remain.
///
/// A stack pass reaches the fixpoint directly: each op either cancels the
/// current top or is pushed. This pass erases a Class A noise injector, so
/// it is off in the default pipeline.
pub fn cancel_adjacent_inverses(circuit: &Circuit) -> Result<Circuit> {
    let (ops, _) = cancel_ops(circuit.ops(), &vec![(); circuit.len()]);
    Circuit::from_ops(circuit.num_qubits(), ops, circuit.measured_qubit())
}

/// Which optimization passes run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Passes {
    pub eliminate_idle: bool,
    pub cancel_inverses: bool,
}

impl Passes {
    /// The default pipeline: idle-qubit elimination when optimizing.
    pub fn standard(optimize: bool) -> Self {
        Passes {
            eliminate_idle: optimize,
            cancel_inverses: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub op: GateOp,
    pub provenance: Provenance,
}

/// Flat instruction list ready for execution.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredProgram {
    pub num_qubits: usize,
    pub measured_qubit: Option<usize>,
    pub instructions: Vec<Instruction>,
    pub qubit_map: QubitMap,
}

#[derive(Serialize)]
struct InstructionFile<'a> {
    kind: GateKind,
    targets: &'a [usize],
    controls: &'a [usize],
    params: &'a [f64],
    provenance: Provenance,
}

#[derive(Serialize)]
struct ProgramFile<'a> {
    schema_version: u32,
    num_qubits: usize,
    measured_qubit: Option<usize>,
    ops: Vec<InstructionFile<'a>>,
}

impl LoweredProgram {
    pub fn to_circuit(&self) -> Result<Circuit> {
        Circuit::from_ops(
            self.num_qubits,
            self.instructions.iter().map(|i| i.op.clone()).collect(),
            self.measured_qubit,
        )
    }

    pub fn count(&self, tag: Provenance) -> usize {
        self.instructions.iter().filter(|i| i.provenance == tag).count()
    }

    pub fn to_json(&self) -> String {
        let file = ProgramFile {
            schema_version: sim::CIRCUIT_SCHEMA_VERSION,
            num_qubits: self.num_qubits,
            measured_qubit: self.measured_qubit,
            ops: self
                .instructions
                .iter()
                .map(|i| InstructionFile {
                    kind: i.op.kind,
                    targets: &i.op.targets,
                    controls: &i.op.controls,
                    params: &i.op.params,
                    provenance: i.provenance,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("program serialization cannot fail")
    }
}

/// Lowers `input` for `config`: prelude first, then the (optionally
/// idle-eliminated) circuit.
pub fn compile(input: &TaggedCircuit, config: &DeviceConfig, optimize: bool) -> Result<LoweredProgram> {
    compile_with(input, config, Passes::standard(optimize))
}

/// Prelude targets name device qubits. After compaction the circuit occupies
/// device qubits `0..k`; a prelude target at or beyond `k` lands on a wire
/// the circuit no longer uses.
pub fn compile_with(input: &TaggedCircuit, config: &DeviceConfig, passes: Passes) -> Result<LoweredProgram> {
    config.validate()?;
    let width = input.circuit.num_qubits();
    if width > config.num_qubits {
        return Err(Error::Scenario(format!(
            "circuit needs {width} qubits, device {} has {}",
            config.device_name, config.num_qubits
        )));
    }
    if input.tags.len() != input.circuit.len() {
        return Err(Error::DimensionMismatch {
            expected: input.circuit.len(),
            got: input.tags.len(),
        });
    }
    let (ops, tags) = if passes.cancel_inverses {
        cancel_ops(input.circuit.ops(), &input.tags)
    } else {
        (input.circuit.ops().to_vec(), input.tags.clone())
    };
    let circuit = Circuit::from_ops(width, ops, input.circuit.measured_qubit())?;
    let (circuit, qubit_map) = if passes.eliminate_idle {
        eliminate_idle_qubits(&circuit)?
    } else {
        let map = QubitMap {
            old_to_new: (0..width).map(Some).collect(),
        };
        (circuit, map)
    };
    let prelude_width = config.prelude.iter().map(|p| p.target + 1).max().unwrap_or(0);
    let num_qubits = circuit.num_qubits().max(prelude_width);
    let mut instructions = Vec::with_capacity(config.prelude.len() + circuit.len());
    for p in &config.prelude {
        instructions.push(Instruction {
            op: GateOp::single(p.gate.kind(), p.target, vec![])?,
            provenance: Provenance::Prelude,
        });
    }
    let measured_qubit = circuit.measured_qubit();
    for (op, provenance) in circuit.into_ops().into_iter().zip(tags) {
        instructions.push(Instruction { op, provenance });
    }
    Ok(LoweredProgram {
        num_qubits,
        measured_qubit,
        instructions,
        qubit_map,
    })
}

/// Equivalence check between two circuits after idle-qubit elimination.
///
/// Up to 6 qubits the full unitaries are compared up to global phase;
/// wider circuits compare ⟨Z⟩ of the measured qubit (default 0) on
/// `n_probes` random product inputs. Tolerance 1e-10 in both modes.
pub fn verify_equivalence(a: &Circuit, b: &Circuit, n_probes: usize, seed: u64) -> Result<bool> {
    let (a, _) = eliminate_idle_qubits(a)?;
    let (b, _) = eliminate_idle_qubits(b)?;
    if a.num_qubits() != b.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.num_qubits(),
            got: b.num_qubits(),
        });
    }
    const TOL: f64 = 1e-10;
    if a.num_qubits() <= 6 {
        let ua = sim::unitary_columns(&a)?;
        let ub = sim::unitary_columns(&b)?;
        return Ok(unitaries_match(&ua, &ub, TOL));
    }
    let qubit = a.measured_qubit().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_probes {
        let input = random_product_state(a.num_qubits(), &mut rng)?;
        let mut sa = input.clone();
        sa.apply_circuit(&a)?;
        let mut sb = input;
        sb.apply_circuit(&b)?;
        if (sa.expectation_z(qubit)? - sb.expectation_z(qubit)?).abs() > TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

fn unitaries_match(ua: &[Statevector], ub: &[Statevector], tol: f64) -> bool {
    // fix the global phase on the largest entry of U_a
    let (mut best, mut pos) = (0.0, (0, 0));
    for (j, col) in ua.iter().enumerate() {
        for (i, z) in col.amplitudes().iter().enumerate() {
            if z.norm() > best {
                best = z.norm();
                pos = (j, i);
            }
        }
    }
    let za = ua[pos.0].amplitudes()[pos.1];
    let zb = ub[pos.0].amplitudes()[pos.1];
    if zb.norm() < tol {
        return false;
    }
    let phase = za / zb;
    let phase = phase / phase.norm();
    ua.iter().zip(ub).all(|(ca, cb)| {
        ca.amplitudes()
            .iter()
            .zip(cb.amplitudes())
            .all(|(x, y)| (x - phase * y).norm() <= tol)
    })
}

/// RY then RZ with uniform random angles on each qubit of |0…0⟩.
pub fn random_product_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Statevector> {
    let mut prep = Circuit::new(num_qubits)?;
    for q in 0..num_qubits {
        prep.ry(q, rng.gen::<f64>() * std::f64::consts::PI)?;
        prep.rz(q, rng.gen::<f64>() * 2.0 * std::f64::consts::PI)?;
    }
    sim::run(&prep)
}
