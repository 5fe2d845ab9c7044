use num_complex::Complex64;
use rand::Rng;

use super::circuit::Circuit;
use super::gate::GateOp;
use super::kernel;
use crate::error::{Error, Result};

/// Amplitudes over `2^n` basis states; bit `i` of the index is qubit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0…0⟩
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Statevector { num_qubits, amps }
    }

    /// Wraps explicit amplitudes; they must have power-of-two length and unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Statevector {
            num_qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
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

    pub fn apply_gate(&mut self, op: &GateOp) -> Result<()> {
        op.validate()?;
        for q in op.qubits() {
            self.check_qubit(q)?;
        }
        let m = op.matrix()?;
        kernel::apply_matrix(&mut self.amps, &op.targets, kernel::control_mask(&op.controls, 0), &m);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                got: circuit.num_qubits(),
            });
        }
        for op in circuit.ops() {
            // ops were validated against this width when pushed
            let m = op.matrix()?;
            kernel::apply_matrix(&mut self.amps, &op.targets, kernel::control_mask(&op.controls, 0), &m);
        }
        Ok(())
    }

    /// Probability of reading 0 on `qubit`.
    pub fn probability_zero(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// ⟨ψ|Z_qubit|ψ⟩
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let e: f64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        Ok(e.clamp(-1.0, 1.0))
    }

    /// Draws `shots` independent Z-basis readouts of `qubit`, returning `(zeros, ones)`.
    pub fn sample_measurements<R: Rng + ?Sized>(&self, qubit: usize, shots: u64, rng: &mut R) -> Result<(u64, u64)> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        let p0 = self.probability_zero(qubit)?;
        let zeros = (0..shots).filter(|_| rng.gen::<f64>() < p0).count() as u64;
        Ok((zeros, shots - zeros))
    }

    /// `|⟨self|other⟩|`, which is 1 exactly when the states agree up to global phase.
    pub fn overlap(&self, other: &Statevector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }
}
