mod common;

use common::*;
use proptest::prelude::*;
use qupt::noise::{
    estimate_expectation, evolve_density, expectation_from_density, run_noisy_trajectory, DensityMatrix, NoiseSpec,
    TrajectoryPlan,
};
use qupt::sim::{self, Circuit, GateKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn library_density_matches_oracle(c: &Circuit, noise: NoiseSpec) -> f64 {
    let n = c.num_qubits();
    let rho = evolve_density(c, &noise).unwrap();
    let oracle = noisy_density_oracle(c, &pure_density(&basis(n, 0)), noise.r1q, noise.r2q);
    let mut worst = 0.0f64;
    for (r, row) in oracle.iter().enumerate() {
        for (col, z) in row.iter().enumerate() {
            worst = worst.max((rho.entry(r, col) - z).norm());
        }
    }
    worst
}

#[test]
fn density_matches_kraus_oracle() {
    let noise = NoiseSpec::new(0.03, 0.08).unwrap();
    for seed in 0..6 {
        let c = random_circuit(seed, 3, 15, 1);
        assert!(library_density_matches_oracle(&c, noise) < 1e-12, "seed {seed}");
    }
}

#[test]
fn x_on_single_qubit_closed_form() {
    let mut c = Circuit::new(1).unwrap();
    c.x(0).unwrap();
    let z = expectation_from_density(&evolve_density(&c, &NoiseSpec::new(0.1, 0.0).unwrap()).unwrap(), 0).unwrap();
    assert!((z - (-0.8667)).abs() < 5e-5);
}

#[test]
fn full_depolarizing_two_qubit_gate_mixes_support() {
    // p = 15/16 maps any two-qubit state to I/4 on the support
    let mut c = Circuit::new(2).unwrap();
    c.cnot(0, 1).unwrap();
    let rho = evolve_density(&c, &NoiseSpec::new(0.0, 15.0 / 16.0).unwrap()).unwrap();
    let mixed = DensityMatrix::maximally_mixed(2).unwrap();
    for r in 0..4 {
        for col in 0..4 {
            assert!((rho.entry(r, col) - mixed.entry(r, col)).norm() < 1e-14);
        }
    }
}

#[test]
fn trajectories_agree_with_density() {
    let mut c = Circuit::new(3).unwrap();
    c.h(0).unwrap().cnot(0, 1).unwrap().ry(2, 0.4).unwrap().ising(GateKind::IsingZZ, 1, 2, 0.9).unwrap();
    c.rx(0, 0.3).unwrap().cnot(2, 0).unwrap();
    let noise = NoiseSpec::new(0.02, 0.1).unwrap();
    let exact = expectation_from_density(&evolve_density(&c, &noise).unwrap(), 0).unwrap();
    let (mean, se) = estimate_expectation(&c, 0, &noise, &TrajectoryPlan::exact(20_000, 5)).unwrap();
    assert!((mean - exact).abs() <= 4.0 * se.max(1e-4), "{mean} ± {se} vs {exact}");
}

#[test]
fn shots_mode_is_consistent() {
    let mut c = Circuit::new(2).unwrap();
    c.ry(0, 1.0).unwrap().cnot(0, 1).unwrap();
    let noise = NoiseSpec::new(0.01, 0.05).unwrap();
    let exact = expectation_from_density(&evolve_density(&c, &noise).unwrap(), 0).unwrap();
    let plan = TrajectoryPlan {
        n_trajectories: 4000,
        shots_per_trajectory: Some(16),
        master_seed: 2,
    };
    let (mean, se) = estimate_expectation(&c, 0, &noise, &plan).unwrap();
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} ± {se} vs {exact}");
}

#[test]
fn estimates_are_reproducible() {
    let c = random_circuit(8, 3, 20, 1);
    let plan = TrajectoryPlan::exact(300, 77);
    let a = estimate_expectation(&c, 1, &NoiseSpec::ARIA_1, &plan).unwrap();
    let b = estimate_expectation(&c, 1, &NoiseSpec::ARIA_1, &plan).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1.to_bits(), b.1.to_bits());
}

#[test]
fn ideal_noise_is_noiseless() {
    let c = random_circuit(9, 4, 30, 2);
    let ideal = sim::run(&c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let traj = run_noisy_trajectory(&c, &NoiseSpec::IDEAL, &mut rng).unwrap();
    assert_eq!(traj, ideal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn density_stays_physical(seed in any::<u64>(), r1 in 0.0f64..0.3, r2 in 0.0f64..0.9) {
        let c = random_circuit(seed, 3, 12, 1);
        let rho = evolve_density(&c, &NoiseSpec::new(r1, r2).unwrap()).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12 && rho.trace().im.abs() < 1e-12);
        prop_assert!(rho.hermiticity_error() < 1e-12);
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
        for q in 0..3 {
            let z = expectation_from_density(&rho, q).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
        }
    }

    #[test]
    fn trajectories_preserve_norm(seed in any::<u64>()) {
        let c = random_circuit(seed, 4, 20, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = run_noisy_trajectory(&c, &NoiseSpec::new(0.2, 0.4).unwrap(), &mut rng).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_density_is_projector(seed in any::<u64>()) {
        let c = random_circuit(seed, 3, 10, 1);
        let rho = evolve_density(&c, &NoiseSpec::IDEAL).unwrap();
        let psi = sim::run(&c).unwrap();
        prop_assert!((rho.quadratic_form(psi.amplitudes()).re - 1.0).abs() < 1e-12);
    }
}
