//! Depolarizing execution: Monte Carlo Pauli trajectories as the default
//! backend, with an exact density-matrix evolution for up to six qubits.
//!
//! One depolarizing event is considered after every gate. It acts on the
//! gate's support (targets first, then controls), capped at two qubits; a
//! support of one qubit uses `r1q`, anything wider uses `r2q`.

mod density;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{kernel, Circuit, GateMatrix, GateOp, Statevector};

pub use density::{evolve_density, evolve_density_from, expectation_from_density, DensityMatrix, MAX_DENSITY_QUBITS};

/// Depolarizing probabilities per one- and two-qubit gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub r1q: f64,
    pub r2q: f64,
}

impl NoiseSpec {
    /// IonQ Aria-1 simulator rates.
    pub const ARIA_1: NoiseSpec = NoiseSpec { r1q: 5e-4, r2q: 1.33e-2 };
    pub const IDEAL: NoiseSpec = NoiseSpec { r1q: 0.0, r2q: 0.0 };

    pub fn new(r1q: f64, r2q: f64) -> Result<Self> {
        let spec = NoiseSpec { r1q, r2q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r1q", self.r1q), ("r2q", self.r2q)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name} = {r} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.r1q == 0.0 && self.r2q == 0.0
    }

    /// Rate and support qubits of the event following `op`.
    pub fn event_for(&self, op: &GateOp) -> (f64, Vec<usize>) {
        let support: Vec<usize> = op.qubits().take(2).collect();
        let rate = if support.len() == 1 { self.r1q } else { self.r2q };
        (rate, support)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> GateMatrix {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        GateMatrix::One(match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        })
    }
}

/// With probability `rate`, one non-identity Pauli string of length `arity`
/// drawn uniformly (3 choices for one qubit, 15 for two).
pub fn sample_pauli_error<R: Rng + ?Sized>(rate: f64, arity: usize, rng: &mut R) -> Option<Vec<Pauli>> {
    debug_assert!(arity == 1 || arity == 2);
    if rate <= 0.0 || rng.gen::<f64>() >= rate {
        return None;
    }
    let choices = (1usize << (2 * arity)) - 1;
    // index 0 is the all-identity string, so draw from 1..=choices
    let code = rng.gen_range(1..=choices);
    Some((0..arity).map(|k| Pauli::ALL[(code >> (2 * k)) & 3]).collect())
}

fn apply_paulis(amps: &mut [Complex64], support: &[usize], paulis: &[Pauli]) {
    for (&q, &p) in support.iter().zip(paulis) {
        if p != Pauli::I {
            kernel::apply_matrix(amps, &[q], 0, &p.matrix());
        }
    }
}

/// One stochastic realization of the noisy channel starting from |0…0⟩.
pub fn run_noisy_trajectory<R: Rng + ?Sized>(circuit: &Circuit, noise: &NoiseSpec, rng: &mut R) -> Result<Statevector> {
    run_noisy_trajectory_from(&Statevector::zero(circuit.num_qubits()), circuit, noise, rng)
}

pub fn run_noisy_trajectory_from<R: Rng + ?Sized>(
    initial: &Statevector,
    circuit: &Circuit,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Statevector> {
    check_width(initial, circuit)?;
    Ok(run_prepared(initial, &prepare(circuit, noise)?, rng))
}

fn check_width(initial: &Statevector, circuit: &Circuit) -> Result<()> {
    if initial.num_qubits() != circuit.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: initial.num_qubits(),
            got: circuit.num_qubits(),
        });
    }
    Ok(())
}

/// A gate with its matrix, control mask and noise event resolved once.
struct PreparedOp<'a> {
    targets: &'a [usize],
    mask: usize,
    matrix: GateMatrix,
    rate: f64,
    support: Vec<usize>,
}

fn prepare<'a>(circuit: &'a Circuit, noise: &NoiseSpec) -> Result<Vec<PreparedOp<'a>>> {
    circuit
        .ops()
        .iter()
        .map(|op| {
            let (rate, support) = noise.event_for(op);
            Ok(PreparedOp {
                targets: &op.targets,
                mask: kernel::control_mask(&op.controls, 0),
                matrix: op.matrix()?,
                rate,
                support,
            })
        })
        .collect()
}

fn run_prepared<R: Rng + ?Sized>(initial: &Statevector, ops: &[PreparedOp<'_>], rng: &mut R) -> Statevector {
    let mut state = initial.clone();
    let amps = state.amplitudes_mut();
    for op in ops {
        kernel::apply_matrix(amps, op.targets, op.mask, &op.matrix);
        if let Some(paulis) = sample_pauli_error(op.rate, op.support.len(), rng) {
            apply_paulis(amps, &op.support, &paulis);
        }
    }
    state
}

/// How many trajectories to run and how each is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub n_trajectories: usize,
    /// `None` reads the exact expectation of each trajectory.
    pub shots_per_trajectory: Option<u64>,
    pub master_seed: u64,
}

impl TrajectoryPlan {
    pub fn exact(n_trajectories: usize, master_seed: u64) -> Self {
        TrajectoryPlan {
            n_trajectories,
            shots_per_trajectory: None,
            master_seed,
        }
    }

    /// Generator for trajectory `index`; independent of execution order.
    pub fn rng_for(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Monte Carlo estimate of ⟨Z_qubit⟩ as `(mean, standard error)`.
pub fn estimate_expectation(circuit: &Circuit, qubit: usize, noise: &NoiseSpec, plan: &TrajectoryPlan) -> Result<(f64, f64)> {
    estimate_expectation_from(&Statevector::zero(circuit.num_qubits()), circuit, qubit, noise, plan)
}

pub fn estimate_expectation_from(
    initial: &Statevector,
    circuit: &Circuit,
    qubit: usize,
    noise: &NoiseSpec,
    plan: &TrajectoryPlan,
) -> Result<(f64, f64)> {
    if plan.n_trajectories == 0 {
        return Err(Error::InvalidArgument("at least one trajectory is required".into()));
    }
    if plan.shots_per_trajectory == Some(0) {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if noise.is_ideal() && plan.shots_per_trajectory.is_none() {
        let mut s = initial.clone();
        s.apply_circuit(circuit)?;
        return Ok((s.expectation_z(qubit)?, 0.0));
    }
    check_width(initial, circuit)?;
    let ops = prepare(circuit, noise)?;
    let samples: Vec<f64> = (0..plan.n_trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = plan.rng_for(i);
            let state = run_prepared(initial, &ops, &mut rng);
            match plan.shots_per_trajectory {
                None => state.expectation_z(qubit),
                Some(shots) => {
                    let (zeros, ones) = state.sample_measurements(qubit, shots, &mut rng)?;
                    Ok((zeros as f64 - ones as f64) / shots as f64)
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_std_error(&samples))
}

pub(crate) fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
