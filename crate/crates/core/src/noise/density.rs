use num_complex::Complex64;

use super::{NoiseSpec, Pauli};
use crate::error::{Error, Result};
use crate::sim::{kernel, Circuit, GateMatrix, GateOp, Statevector};

/// Largest width accepted by the exact density-matrix path.
pub const MAX_DENSITY_QUBITS: usize = 6;

/// Dense `2^n × 2^n` density matrix.
///
/// Stored row-major, so entry `(r, c)` sits at `r·2^n + c`. Read as a
/// `2n`-qubit vector, the column index occupies bits `0..n` and the row
/// index bits `n..2n`; `UρU†` is then `U` on the row bits and `U*` on the
/// column bits, which lets the statevector kernels do the work.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &Statevector) -> Result<Self> {
        let n = state.num_qubits();
        check_width(n)?;
        let a = state.amplitudes();
        let dim = a.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = a[r] * a[c].conj();
            }
        }
        Ok(DensityMatrix { num_qubits: n, data })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(DensityMatrix { num_qubits, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        // ρ is Hermitian, so Tr(ρ²) = Σ |ρ_rc|²
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|ρ_rc − conj(ρ_cr)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    /// ⟨v|ρ|v⟩ for an unnormalized vector `v`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Complex64 {
        let dim = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            for c in 0..dim {
                acc += v[r].conj() * self.entry(r, c) * v[c];
            }
        }
        acc
    }

    /// Reduced 2×2 state of one qubit.
    pub fn reduced_qubit(&self, qubit: usize) -> Result<[[Complex64; 2]; 2]> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        let bit = 1usize << qubit;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..self.dim() {
            // sum over the other qubits: columns share every bit of r except `qubit`
            for b in 0..2 {
                let c = (r & !bit) | (b * bit);
                let (rb, cb) = ((r & bit != 0) as usize, b);
                out[rb][cb] += self.entry(r, c);
            }
        }
        Ok(out)
    }

    fn apply_matrix(&mut self, targets: &[usize], controls: &[usize], m: &GateMatrix) {
        let n = self.num_qubits;
        let row_targets: Vec<usize> = targets.iter().map(|t| t + n).collect();
        kernel::apply_matrix(&mut self.data, &row_targets, kernel::control_mask(controls, n), m);
        kernel::apply_matrix(&mut self.data, targets, kernel::control_mask(controls, 0), &m.conj());
    }

    /// ρ → UρU†
    pub fn apply_gate(&mut self, op: &GateOp) -> Result<()> {
        if let Some(q) = op.qubits().find(|&q| q >= self.num_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        let m = op.matrix()?;
        self.apply_matrix(&op.targets, &op.controls, &m);
        Ok(())
    }

    /// ρ → (1−p)ρ + p/(4^k−1) Σ_{P≠I} PρP over the `k` support qubits.
    pub fn depolarize(&mut self, support: &[usize], rate: f64) {
        if rate <= 0.0 {
            return;
        }
        let k = support.len();
        let strings = (1usize << (2 * k)) - 1;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for code in 1..=strings {
            let mut term = self.clone();
            for (j, &q) in support.iter().enumerate() {
                let p = Pauli::ALL[(code >> (2 * j)) & 3];
                if p != Pauli::I {
                    term.apply_matrix(&[q], &[], &p.matrix());
                }
            }
            for (a, t) in acc.iter_mut().zip(&term.data) {
                *a += t;
            }
        }
        let w = rate / strings as f64;
        for (d, a) in self.data.iter_mut().zip(&acc) {
            *d = *d * (1.0 - rate) + a * w;
        }
    }
}

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_DENSITY_QUBITS {
        return Err(Error::TooManyQubits {
            num_qubits,
            max: MAX_DENSITY_QUBITS,
        });
    }
    Ok(())
}

/// Exact noisy evolution of |0…0⟩⟨0…0| through `circuit`.
pub fn evolve_density(circuit: &Circuit, noise: &NoiseSpec) -> Result<DensityMatrix> {
    check_width(circuit.num_qubits())?;
    let rho = DensityMatrix::from_pure(&Statevector::zero(circuit.num_qubits()))?;
    evolve_density_from(rho, circuit, noise)
}

pub fn evolve_density_from(mut rho: DensityMatrix, circuit: &Circuit, noise: &NoiseSpec) -> Result<DensityMatrix> {
    if rho.num_qubits() != circuit.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.num_qubits(),
            got: circuit.num_qubits(),
        });
    }
    for op in circuit.ops() {
        rho.apply_gate(op)?;
        let (rate, support) = noise.event_for(op);
        rho.depolarize(&support, rate);
    }
    Ok(rho)
}

/// Tr(ρ·Z_qubit)
pub fn expectation_from_density(rho: &DensityMatrix, qubit: usize) -> Result<f64> {
    if qubit >= rho.num_qubits() {
        return Err(Error::QubitOutOfRange {
            qubit,
            num_qubits: rho.num_qubits(),
        });
    }
    let bit = 1usize << qubit;
    Ok((0..rho.dim())
        .map(|i| {
            let d = rho.entry(i, i).re;
            if i & bit == 0 {
                d
            } else {
                -d
            }
        })
        .sum())
}
