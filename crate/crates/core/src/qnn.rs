//! The binary classifier: a 4-qubit quanvolution filter with CRZ pooling
//! slides over the image (2×2 kernel, stride 2), the 14×14 feature map is
//! reduced to 8 values, and an 8-qubit strongly entangling circuit turns
//! them into a logit ⟨Z₀⟩.
//!
//! Flat parameter layout: `conv` (36) then `pool` (3) then `vqc` (72). Within
//! a block, the Rot angles of layer `l`, qubit `q` are at `l·3n + 3q + {0,1,2}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{estimate_expectation, NoiseSpec, TrajectoryPlan};
use crate::sim::{kernel, Circuit, GateKind, GateMatrix, GateOp, Statevector};
use crate::trojan::Host;

pub const IMAGE_SIDE: usize = 28;
pub const KERNEL: usize = 2;
pub const STRIDE: usize = 2;
pub const MAP_SIDE: usize = (IMAGE_SIDE - KERNEL) / STRIDE + 1;
pub const CONV_QUBITS: usize = 4;
pub const CONV_LAYERS: usize = 3;
pub const VQC_QUBITS: usize = 8;
pub const VQC_LAYERS: usize = 3;
pub const CONV_PARAMS: usize = CONV_QUBITS * CONV_LAYERS * 3;
pub const POOL_PARAMS: usize = CONV_QUBITS - 1;
pub const VQC_PARAMS: usize = VQC_QUBITS * VQC_LAYERS * 3;
pub const PARAM_COUNT: usize = CONV_PARAMS + POOL_PARAMS + VQC_PARAMS;

/// Offsets of each block in the flat parameter vector.
pub const POOL_OFFSET: usize = CONV_PARAMS;
pub const VQC_OFFSET: usize = CONV_PARAMS + POOL_PARAMS;

/// Trainable angles of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QnnParams {
    pub conv: Vec<f64>,
    pub pool: Vec<f64>,
    pub vqc: Vec<f64>,
}

impl QnnParams {
    pub fn zeros() -> Self {
        QnnParams {
            conv: vec![0.0; CONV_PARAMS],
            pool: vec![0.0; POOL_PARAMS],
            vqc: vec![0.0; VQC_PARAMS],
        }
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != PARAM_COUNT {
            return Err(Error::DimensionMismatch {
                expected: PARAM_COUNT,
                got: flat.len(),
            });
        }
        let p = QnnParams {
            conv: flat[..POOL_OFFSET].to_vec(),
            pool: flat[POOL_OFFSET..VQC_OFFSET].to_vec(),
            vqc: flat[VQC_OFFSET..].to_vec(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(PARAM_COUNT);
        v.extend_from_slice(&self.conv);
        v.extend_from_slice(&self.pool);
        v.extend_from_slice(&self.vqc);
        v
    }

    pub fn len(&self) -> usize {
        self.conv.len() + self.pool.len() + self.vqc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, block, n) in [
            ("conv", &self.conv, CONV_PARAMS),
            ("pool", &self.pool, POOL_PARAMS),
            ("vqc", &self.vqc, VQC_PARAMS),
        ] {
            if block.len() != n {
                return Err(Error::Schema(format!("{name} block has {} angles, expected {n}", block.len())));
            }
            if block.iter().any(|x| !x.is_finite()) {
                return Err(Error::Schema(format!("{name} block contains a non-finite angle")));
            }
        }
        Ok(())
    }
}

/// 28×28 grayscale image with pixels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != IMAGE_SIDE * IMAGE_SIDE {
            return Err(Error::DimensionMismatch {
                expected: IMAGE_SIDE * IMAGE_SIDE,
                got: pixels.len(),
            });
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("pixel {p} outside [0, 1]")));
        }
        Ok(Image { pixels })
    }

    /// Raw bytes scaled by 1/255.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Image::new(bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }

    pub fn constant(value: f64) -> Result<Self> {
        Image::new(vec![value; IMAGE_SIDE * IMAGE_SIDE])
    }

    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * IMAGE_SIDE + col]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Kernel window at map cell `(row, col)`, flattened top-left, top-right,
    /// bottom-left, bottom-right.
    pub fn patch(&self, row: usize, col: usize) -> [f64; 4] {
        let (r, c) = (row * STRIDE, col * STRIDE);
        [self.pixel(r, c), self.pixel(r, c + 1), self.pixel(r + 1, c), self.pixel(r + 1, c + 1)]
    }
}

/// 14×14 grid of filter expectation values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != MAP_SIDE * MAP_SIDE {
            return Err(Error::DimensionMismatch {
                expected: MAP_SIDE * MAP_SIDE,
                got: values.len(),
            });
        }
        Ok(FeatureMap { values })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * MAP_SIDE + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Where a gate angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Index into the flat 111-angle vector.
    Param(usize),
    /// Index into the circuit's classical input vector.
    Input(usize),
}

/// Angle `op.params[slot]` equals `coeff · source + const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binding {
    pub op: usize,
    pub slot: usize,
    pub source: Source,
    pub coeff: f64,
}

/// A circuit with a record of which angles depend on which parameters.
#[derive(Debug, Clone)]
pub struct Template {
    pub circuit: Circuit,
    pub bindings: Vec<Binding>,
}

/// How pooling CRZ gates are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrzForm {
    Native,
    /// CNOT · RZ(−θ/2) · CNOT · RZ(θ/2) on the target, in time order, so every
    /// trainable angle sits in a gate with a two-term shift rule.
    Decomposed,
}

impl Template {
    fn new(num_qubits: usize, measured: usize) -> Result<Self> {
        let mut circuit = Circuit::new(num_qubits)?;
        circuit.set_measured_qubit(Some(measured))?;
        Ok(Template {
            circuit,
            bindings: Vec::new(),
        })
    }

    fn push(&mut self, op: GateOp, bind: &[(usize, Source, f64)]) -> Result<()> {
        let idx = self.circuit.len();
        self.circuit.push(op)?;
        self.bindings.extend(bind.iter().map(|&(slot, source, coeff)| Binding {
            op: idx,
            slot,
            source,
            coeff,
        }));
        Ok(())
    }

    fn encode(&mut self, values: &[f64], bind_inputs: bool) -> Result<()> {
        for (q, &v) in values.iter().enumerate() {
            check_unit(v)?;
            let bind: &[(usize, Source, f64)] = if bind_inputs { &[(0, Source::Input(q), PI)] } else { &[] };
            self.push(GateOp::single(GateKind::RY, q, vec![PI * v])?, bind)?;
        }
        Ok(())
    }

    /// `layers` of Rot on every qubit followed by a CNOT ring q→q+1 mod n.
    fn entangling_layers(&mut self, n: usize, layers: usize, angles: &[f64], offset: usize) -> Result<()> {
        for l in 0..layers {
            for q in 0..n {
                let base = l * 3 * n + 3 * q;
                let a = &angles[base..base + 3];
                self.push(
                    GateOp::single(GateKind::Rot, q, a.to_vec())?,
                    &[
                        (0, Source::Param(offset + base), 1.0),
                        (1, Source::Param(offset + base + 1), 1.0),
                        (2, Source::Param(offset + base + 2), 1.0),
                    ],
                )?;
            }
            for q in 0..n {
                self.push(GateOp::new(GateKind::CNOT, vec![(q + 1) % n], vec![q], vec![])?, &[])?;
            }
        }
        Ok(())
    }

    fn matrices(&self) -> Result<Vec<GateMatrix>> {
        self.circuit.ops().iter().map(GateOp::matrix).collect()
    }

    pub fn expectation(&self) -> Result<f64> {
        let mut s = Statevector::zero(self.circuit.num_qubits());
        s.apply_circuit(&self.circuit)?;
        s.expectation_z(self.measured())
    }

    fn measured(&self) -> usize {
        self.circuit.measured_qubit().unwrap_or(0)
    }

    /// Value and parameter-shift derivatives: `(⟨Z⟩, ∂/∂params, ∂/∂inputs)`.
    ///
    /// Each bound angle is shifted by ±π/2; the state before the shifted
    /// gate is shared by both evaluations and by later bindings.
    pub fn value_and_gradient(&self, n_params: usize, n_inputs: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let ops = self.circuit.ops();
        let mats = self.matrices()?;
        let qubit = self.measured();
        let masks: Vec<usize> = ops.iter().map(|op| kernel::control_mask(&op.controls, 0)).collect();
        let run_from = |state: &mut Statevector, from: usize| {
            for i in from..ops.len() {
                kernel::apply_matrix(state.amplitudes_mut(), &ops[i].targets, masks[i], &mats[i]);
            }
        };

        let mut order: Vec<usize> = (0..self.bindings.len()).collect();
        order.sort_by_key(|&b| self.bindings[b].op);

        let mut dparams = vec![0.0; n_params];
        let mut dinputs = vec![0.0; n_inputs];
        let mut prefix = Statevector::zero(self.circuit.num_qubits());
        let mut applied = 0;
        for &b in &order {
            let bind = self.bindings[b];
            run_prefix(&mut prefix, ops, &mats, &masks, applied, bind.op);
            applied = bind.op;
            let mut shifted = [0.0; 2];
            for (k, delta) in [PI / 2.0, -PI / 2.0].into_iter().enumerate() {
                let op = &ops[bind.op];
                let mut params = op.params.clone();
                params[bind.slot] += delta;
                let m = crate::sim::build_gate_matrix(op.kind, &params)?;
                let mut s = prefix.clone();
                kernel::apply_matrix(s.amplitudes_mut(), &op.targets, masks[bind.op], &m);
                run_from(&mut s, bind.op + 1);
                shifted[k] = s.expectation_z(qubit)?;
            }
            let d = bind.coeff * (shifted[0] - shifted[1]) / 2.0;
            match bind.source {
                Source::Param(i) => dparams[i] += d,
                Source::Input(i) => dinputs[i] += d,
            }
        }
        run_prefix(&mut prefix, ops, &mats, &masks, applied, ops.len());
        Ok((prefix.expectation_z(qubit)?, dparams, dinputs))
    }
}

fn run_prefix(state: &mut Statevector, ops: &[GateOp], mats: &[GateMatrix], masks: &[usize], from: usize, to: usize) {
    for i in from..to {
        kernel::apply_matrix(state.amplitudes_mut(), &ops[i].targets, masks[i], &mats[i]);
    }
}

fn check_unit(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("encoder value {v} outside [0, 1]")));
    }
    Ok(())
}

/// RY(π·v) on qubit `i` for each value.
pub fn encode_angles(values: &[f64], n_qubits: usize) -> Result<Circuit> {
    if values.len() != n_qubits {
        return Err(Error::DimensionMismatch {
            expected: n_qubits,
            got: values.len(),
        });
    }
    let mut t = Template::new(n_qubits, 0)?;
    t.encode(values, false)?;
    let mut c = t.circuit;
    c.set_measured_qubit(None)?;
    Ok(c)
}

/// Filter circuit with bindings into the flat parameter vector.
pub fn filter_template(patch: &[f64; 4], conv: &[f64], pool: &[f64], form: CrzForm) -> Result<Template> {
    if conv.len() != CONV_PARAMS || pool.len() != POOL_PARAMS {
        return Err(Error::DimensionMismatch {
            expected: CONV_PARAMS + POOL_PARAMS,
            got: conv.len() + pool.len(),
        });
    }
    let mut t = Template::new(CONV_QUBITS, 0)?;
    t.encode(patch, false)?;
    t.entangling_layers(CONV_QUBITS, CONV_LAYERS, conv, 0)?;
    for (i, &theta) in pool.iter().enumerate() {
        let (control, target) = (i + 1, i);
        let src = Source::Param(POOL_OFFSET + i);
        match form {
            CrzForm::Native => {
                t.push(GateOp::new(GateKind::CRZ, vec![target], vec![control], vec![theta])?, &[(0, src, 1.0)])?;
            }
            CrzForm::Decomposed => {
                let cx = GateOp::new(GateKind::CNOT, vec![target], vec![control], vec![])?;
                t.push(cx.clone(), &[])?;
                t.push(GateOp::single(GateKind::RZ, target, vec![-theta / 2.0])?, &[(0, src, -0.5)])?;
                t.push(cx, &[])?;
                t.push(GateOp::single(GateKind::RZ, target, vec![theta / 2.0])?, &[(0, src, 0.5)])?;
            }
        }
    }
    Ok(t)
}

/// Encoder, three strongly entangling layers and the CRZ pooling chain on
/// 4 qubits; qubit 0 is measured.
pub fn build_filter_circuit(patch: &[f64; 4], conv: &[f64], pool: &[f64]) -> Result<Circuit> {
    Ok(filter_template(patch, conv, pool, CrzForm::Native)?.circuit)
}

/// Ideal ⟨Z₀⟩ of the filter on every 2×2 window.
pub fn quanvolve(image: &Image, params: &QnnParams) -> Result<FeatureMap> {
    let mut values = Vec::with_capacity(MAP_SIDE * MAP_SIDE);
    for r in 0..MAP_SIDE {
        for c in 0..MAP_SIDE {
            let t = filter_template(&image.patch(r, c), &params.conv, &params.pool, CrzForm::Native)?;
            values.push(t.expectation()?);
        }
    }
    FeatureMap::new(values)
}

/// Weight of map cell `(row, _)` in each of the 8 reduced features, before
/// the `(v+1)/2` rescale.
pub fn downsample_weights(row: usize) -> [f64; VQC_QUBITS] {
    let mut w = [0.0; VQC_QUBITS];
    let band = row / 2;
    if band < VQC_QUBITS - 1 {
        w[band] = 1.0 / (2 * MAP_SIDE) as f64;
    }
    w[VQC_QUBITS - 1] = 1.0 / (MAP_SIDE * MAP_SIDE) as f64;
    w
}

/// Seven two-row band means plus the whole-map mean, mapped from [−1, 1] to [0, 1].
pub fn downsample_features(map: &FeatureMap) -> [f64; VQC_QUBITS] {
    let mut out = [0.0; VQC_QUBITS];
    for r in 0..MAP_SIDE {
        let w = downsample_weights(r);
        for c in 0..MAP_SIDE {
            let v = map.get(r, c);
            for (o, wk) in out.iter_mut().zip(w) {
                *o += wk * v;
            }
        }
    }
    out.map(|v| ((v + 1.0) / 2.0).clamp(0.0, 1.0))
}

/// VQC with bindings: vqc angles index the flat vector, inputs are the 8 features.
pub fn vqc_template(features: &[f64; VQC_QUBITS], vqc: &[f64], ancilla: bool) -> Result<Template> {
    if vqc.len() != VQC_PARAMS {
        return Err(Error::DimensionMismatch {
            expected: VQC_PARAMS,
            got: vqc.len(),
        });
    }
    let width = VQC_QUBITS + ancilla as usize;
    let mut t = Template::new(width, 0)?;
    t.encode(features, true)?;
    t.entangling_layers(VQC_QUBITS, VQC_LAYERS, vqc, VQC_OFFSET)?;
    Ok(t)
}

pub fn build_vqc_circuit(features: &[f64; VQC_QUBITS], vqc: &[f64], ancilla: bool) -> Result<Circuit> {
    Ok(vqc_template(features, vqc, ancilla)?.circuit)
}

/// The VQC as an implant host; the encoder is its first 8 ops.
pub fn build_vqc_host(features: &[f64; VQC_QUBITS], vqc: &[f64], ancilla: bool) -> Result<Host> {
    Host::new(build_vqc_circuit(features, vqc, ancilla)?, VQC_QUBITS)
}

/// Number of distinct trainable angles across the filter, pooling and VQC.
pub fn trainable_parameter_count(params: &QnnParams) -> Result<usize> {
    let filter = filter_template(&[0.0; 4], &params.conv, &params.pool, CrzForm::Native)?;
    let vqc = vqc_template(&[0.0; VQC_QUBITS], &params.vqc, false)?;
    let mut ids: Vec<usize> = filter
        .bindings
        .iter()
        .chain(&vqc.bindings)
        .filter_map(|b| match b.source {
            Source::Param(i) => Some(i),
            Source::Input(_) => None,
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(ids.len())
}

/// Execution backend for the VQC stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Ideal,
    Noisy { noise: NoiseSpec, plan: TrajectoryPlan },
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ⟨Z₀⟩ of a finished circuit on the requested backend.
pub fn logit_of(circuit: &Circuit, backend: &Backend) -> Result<f64> {
    let qubit = circuit.measured_qubit().unwrap_or(0);
    match backend {
        Backend::Ideal => crate::sim::run(circuit)?.expectation_z(qubit),
        Backend::Noisy { noise, plan } => Ok(estimate_expectation(circuit, qubit, noise, plan)?.0),
    }
}

/// Class-1 probability: sigmoid of the VQC's ⟨Z₀⟩. The quanvolution stage is always ideal.
pub fn forward(image: &Image, params: &QnnParams, backend: &Backend) -> Result<f64> {
    let features = downsample_features(&quanvolve(image, params)?);
    let circuit = build_vqc_circuit(&features, &params.vqc, false)?;
    Ok(sigmoid(logit_of(&circuit, backend)?))
}

/// 1 when `p ≥ threshold`.
pub fn predict(p: f64, threshold: f64) -> u8 {
    (p >= threshold) as u8
}
