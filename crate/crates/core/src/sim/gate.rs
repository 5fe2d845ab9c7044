use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The gate vocabulary shared by the model, the Trojans and compiled programs.
///
/// `CNOT` and `CRZ` are intrinsically controlled: their matrix is the 2×2
/// block applied to the target (X and RZ respectively) and they carry at
/// least one control qubit.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    RX,
    RY,
    RZ,
    Rot,
    CNOT,
    CRZ,
    SWAP,
    IsingXX,
    IsingYY,
    IsingZZ,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::H,
        GateKind::X,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::Rot,
        GateKind::CNOT,
        GateKind::CRZ,
        GateKind::SWAP,
        GateKind::IsingXX,
        GateKind::IsingYY,
        GateKind::IsingZZ,
    ];

    /// Number of target qubits.
    pub fn arity(self) -> usize {
        match self {
            GateKind::SWAP | GateKind::IsingXX | GateKind::IsingYY | GateKind::IsingZZ => 2,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::CNOT | GateKind::SWAP => 0,
            GateKind::Rot => 3,
            _ => 1,
        }
    }

    /// Minimum number of controls the kind carries by definition.
    pub fn intrinsic_controls(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::CRZ => 1,
            _ => 0,
        }
    }

    /// True when the gate's two targets can be exchanged without changing it.
    pub fn symmetric_targets(self) -> bool {
        self.arity() == 2
    }

    pub fn is_self_inverse(self) -> bool {
        self.param_count() == 0
    }
}

/// Matrix acting on the target qubits of a gate.
///
/// For two-target gates the local basis index is `b0 + 2·b1` where `b0` is
/// the bit of `targets[0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::One(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match self {
            GateMatrix::One(m) => m[row][col],
            GateMatrix::Two(m) => m[row][col],
        }
    }

    /// Largest entry of `|M†M − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    pub fn conj(&self) -> GateMatrix {
        match self {
            GateMatrix::One(m) => GateMatrix::One(m.map(|row| row.map(|z| z.conj()))),
            GateMatrix::Two(m) => GateMatrix::Two(m.map(|row| row.map(|z| z.conj()))),
        }
    }
}

fn mul2(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rx(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

fn ry(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> [[Complex64; 2]; 2] {
    [
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

/// exp(−i θ/2 · P⊗P) for P ∈ {X, Y, Z}, built from `cos(θ/2)·I − i sin(θ/2)·P⊗P`.
fn ising(kind: GateKind, theta: f64) -> [[Complex64; 4]; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = [[ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(c, 0.0);
    }
    let minus_is = Complex64::new(0.0, -s);
    match kind {
        GateKind::IsingXX => {
            // X⊗X maps |b0 b1⟩ to |¬b0 ¬b1⟩.
            for i in 0..4 {
                m[i][3 - i] += minus_is;
            }
        }
        GateKind::IsingYY => {
            // Y⊗Y: −1 between |00⟩ and |11⟩, +1 between |01⟩ and |10⟩.
            let yy = [[0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += minus_is * yy[i][j];
                }
            }
        }
        GateKind::IsingZZ => {
            let zz = [1.0, -1.0, -1.0, 1.0];
            for i in 0..4 {
                m[i][i] += minus_is * zz[i];
            }
        }
        _ => unreachable!("not an Ising kind"),
    }
    m
}

/// Matrix of `kind` on its target qubits.
pub fn build_gate_matrix(kind: GateKind, params: &[f64]) -> Result<GateMatrix> {
    if params.len() != kind.param_count() {
        return Err(Error::ParamCount {
            kind,
            expected: kind.param_count(),
            got: params.len(),
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match kind {
        GateKind::H => GateMatrix::One([
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ]),
        GateKind::X | GateKind::CNOT => GateMatrix::One([[ZERO, ONE], [ONE, ZERO]]),
        GateKind::RX => GateMatrix::One(rx(params[0])),
        GateKind::RY => GateMatrix::One(ry(params[0])),
        GateKind::RZ | GateKind::CRZ => GateMatrix::One(rz(params[0])),
        GateKind::Rot => {
            let (phi, theta, omega) = (params[0], params[1], params[2]);
            GateMatrix::One(mul2(rz(omega), mul2(ry(theta), rz(phi))))
        }
        GateKind::SWAP => {
            let mut m = [[ZERO; 4]; 4];
            m[0][0] = ONE;
            m[1][2] = ONE;
            m[2][1] = ONE;
            m[3][3] = ONE;
            GateMatrix::Two(m)
        }
        GateKind::IsingXX | GateKind::IsingYY | GateKind::IsingZZ => {
            GateMatrix::Two(ising(kind, params[0]))
        }
    })
}

/// One gate application: a kind, its targets, extra control qubits and angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(default)]
    pub controls: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let op = GateOp {
            kind,
            targets,
            controls,
            params,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn single(kind: GateKind, target: usize, params: Vec<f64>) -> Result<Self> {
        Self::new(kind, vec![target], Vec::new(), params)
    }

    /// Structural checks that do not depend on the circuit width.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        if self.targets.len() != kind.arity() {
            return Err(Error::TargetCount {
                kind,
                expected: kind.arity(),
                got: self.targets.len(),
            });
        }
        if self.params.len() != kind.param_count() {
            return Err(Error::ParamCount {
                kind,
                expected: kind.param_count(),
                got: self.params.len(),
            });
        }
        if self.controls.len() < kind.intrinsic_controls() {
            return Err(Error::MissingControl(kind));
        }
        let mut seen: Vec<usize> = self.qubits().collect();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateQubit { qubit: w[0] });
        }
        if let Some(p) = self.params.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite angle {p}")));
        }
        Ok(())
    }

    /// Targets followed by controls.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(self.controls.iter()).copied()
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().max().unwrap_or(0)
    }

    pub fn matrix(&self) -> Result<GateMatrix> {
        build_gate_matrix(self.kind, &self.params)
    }

    pub fn inverse(&self) -> GateOp {
        let params = match self.kind {
            GateKind::Rot => vec![-self.params[2], -self.params[1], -self.params[0]],
            _ => self.params.iter().map(|p| -p).collect(),
        };
        GateOp {
            kind: self.kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
            params,
        }
    }

    /// True when `other` is exactly this gate's inverse on the same wires.
    pub fn is_inverse_of(&self, other: &GateOp) -> bool {
        if self.kind != other.kind || !same_set(&self.controls, &other.controls) {
            return false;
        }
        let wires_match = if self.kind.symmetric_targets() {
            same_set(&self.targets, &other.targets)
        } else {
            self.targets == other.targets
        };
        wires_match && self.inverse().params == other.params
    }
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// Adds `control` to `op`; the result acts only where `control` is |1⟩.
pub fn with_control(op: &GateOp, control: usize) -> Result<GateOp> {
    if op.qubits().any(|q| q == control) {
        return Err(Error::DuplicateQubit { qubit: control });
    }
    let mut lifted = op.clone();
    lifted.controls.push(control);
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_matrix() {
        let m = build_gate_matrix(GateKind::H, &[]).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!(close(m.get(0, 0), Complex64::new(h, 0.0)));
        assert!(close(m.get(1, 1), Complex64::new(-h, 0.0)));
        assert!(close(m.get(0, 1), m.get(1, 0)));
    }

    #[test]
    fn rz_zero_is_identity() {
        let m = build_gate_matrix(GateKind::RZ, &[0.0]).unwrap();
        assert!(close(m.get(0, 0), ONE) && close(m.get(1, 1), ONE));
        assert!(close(m.get(0, 1), ZERO) && close(m.get(1, 0), ZERO));
    }

    #[test]
    fn ising_xx_at_pi() {
        // exp(−iπ/2 X⊗X) = −i X⊗X
        let m = build_gate_matrix(GateKind::IsingXX, &[PI]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i + j == 3 { Complex64::new(0.0, -1.0) } else { ZERO };
                assert!(close(m.get(i, j), expected), "({i},{j}) = {}", m.get(i, j));
            }
        }
    }

    #[test]
    fn wrong_param_count_rejected() {
        assert!(matches!(
            build_gate_matrix(GateKind::Rot, &[0.1]),
            Err(Error::ParamCount { expected: 3, got: 1, .. })
        ));
        assert!(build_gate_matrix(GateKind::H, &[0.1]).is_err());
    }

    #[test]
    fn kind_table() {
        for kind in GateKind::ALL {
            assert!(matches!(kind.param_count(), 0 | 1 | 3));
            assert!(matches!(kind.arity(), 1 | 2));
        }
        assert_eq!(GateKind::Rot.param_count(), 3);
        assert_eq!(GateKind::CRZ.param_count(), 1);
        assert_eq!(GateKind::SWAP.param_count(), 0);
    }

    #[test]
    fn op_validation() {
        assert!(GateOp::new(GateKind::CNOT, vec![0], vec![], vec![]).is_err());
        assert!(GateOp::new(GateKind::CNOT, vec![0], vec![0], vec![]).is_err());
        assert!(GateOp::new(GateKind::SWAP, vec![0], vec![], vec![]).is_err());
        assert!(GateOp::new(GateKind::CRZ, vec![1], vec![2], vec![0.5]).is_ok());
    }

    #[test]
    fn with_control_rejects_duplicates() {
        let op = GateOp::single(GateKind::H, 0, vec![]).unwrap();
        assert!(with_control(&op, 0).is_err());
        let lifted = with_control(&op, 3).unwrap();
        assert_eq!(lifted.controls, vec![3]);
        assert!(with_control(&lifted, 3).is_err());
    }

    #[test]
    fn inverse_pairs() {
        let rot = GateOp::single(GateKind::Rot, 0, vec![0.1, 0.2, 0.3]).unwrap();
        assert!(rot.is_inverse_of(&rot.inverse()));
        let xx = GateOp::new(GateKind::IsingXX, vec![0, 1], vec![], vec![0.4]).unwrap();
        let xx_rev = GateOp::new(GateKind::IsingXX, vec![1, 0], vec![], vec![-0.4]).unwrap();
        assert!(xx.is_inverse_of(&xx_rev));
        let cx = GateOp::new(GateKind::CNOT, vec![1], vec![0], vec![]).unwrap();
        let xc = GateOp::new(GateKind::CNOT, vec![0], vec![1], vec![]).unwrap();
        assert!(cx.is_inverse_of(&cx));
        assert!(!cx.is_inverse_of(&xc));
    }
}
