mod common;

use common::*;
use proptest::prelude::*;
use qupt::compile::{
    cancel_adjacent_inverses, compile, compile_with, eliminate_idle_qubits, parse_config, random_product_state,
    verify_equivalence, DeviceConfig, Passes,
};
use qupt::noise::NoiseSpec;
use qupt::sim::Circuit;
use qupt::trojan::{build_trojan, implant, Host, Provenance, TaggedCircuit, TrojanClass, TrojanSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn class_c_model(n: usize) -> TaggedCircuit {
    let mut host = Circuit::new(n + 1).unwrap();
    for q in 0..n {
        host.ry(q, 0.3 + 0.2 * q as f64).unwrap();
    }
    for q in 0..n {
        host.cnot(q, (q + 1) % n).unwrap();
    }
    host.rot(0, 0.2, 0.7, -0.4).unwrap();
    host.set_measured_qubit(Some(0)).unwrap();
    let h = Host::new(host, n).unwrap();
    let t = build_trojan(n, &TrojanSpec::new(TrojanClass::C, n, 0)).unwrap();
    implant(&h, &t, TrojanClass::C.default_insertion()).unwrap()
}

#[test]
fn malicious_config_puts_x_first() {
    let model = class_c_model(8);
    let evil = DeviceConfig::benign("aria-1-sim", 9, NoiseSpec::ARIA_1).with_trigger(8).unwrap();
    let p = compile(&model, &evil, true).unwrap();
    let first = &p.instructions[0];
    assert_eq!(first.provenance, Provenance::Prelude);
    assert_eq!(first.op.kind, qupt::sim::GateKind::X);
    assert_eq!(first.op.targets, vec![8]);
    assert_eq!(p.instructions.len(), 1 + model.circuit.len());
}

#[test]
fn program_json_is_deterministic_and_tagged() {
    let model = class_c_model(3);
    let evil = DeviceConfig::benign("d", 4, NoiseSpec::IDEAL).with_trigger(3).unwrap();
    let a = compile(&model, &evil, true).unwrap().to_json();
    let b = compile(&model, &evil, true).unwrap().to_json();
    assert_eq!(a, b);
    assert!(a.starts_with(
        r#"{"schema_version":1,"num_qubits":4,"measured_qubit":0,"ops":[{"kind":"X","targets":[3],"controls":[],"params":[],"provenance":"prelude"}"#
    ));
    assert!(a.contains(r#""provenance":"shield""#));
    assert!(a.contains(r#""provenance":"trojan""#));
}

#[test]
fn benign_vs_triggered_programs_differ() {
    let model = class_c_model(3);
    let benign = DeviceConfig::benign("d", 4, NoiseSpec::IDEAL);
    let evil = benign.with_trigger(3).unwrap();
    let pb = compile(&model, &benign, true).unwrap().to_circuit().unwrap();
    let pe = compile(&model, &evil, true).unwrap().to_circuit().unwrap();
    assert!(!verify_equivalence(&pb, &pe, 16, 0).unwrap());
    assert!(verify_equivalence(&pb, &model.circuit, 16, 0).unwrap());
}

#[test]
fn shield_keeps_ancilla_only_when_present() {
    let model = class_c_model(4);
    assert_eq!(eliminate_idle_qubits(&model.circuit).unwrap().0.num_qubits(), 5);
    let unshielded: Vec<_> = model
        .circuit
        .ops()
        .iter()
        .zip(&model.tags)
        .filter(|(_, t)| **t == Provenance::Host)
        .map(|(op, _)| op.clone())
        .collect();
    let bare = Circuit::from_ops(5, unshielded, Some(0)).unwrap();
    let (out, map) = eliminate_idle_qubits(&bare).unwrap();
    assert_eq!(out.num_qubits(), 4);
    assert_eq!(map.removed(), vec![4]);
}

#[test]
fn wide_circuits_use_probe_mode() {
    let c = random_circuit(4, 8, 40, 1);
    assert!(verify_equivalence(&c, &c, 10, 1).unwrap());
    let mut d = c.clone();
    d.h(0).unwrap();
    assert!(!verify_equivalence(&c, &d, 10, 1).unwrap());
}

#[test]
fn config_bit_exact_example() {
    let text = r#"{"schema_version":1,"device_name":"aria-1-sim","num_qubits":9,"noise":{"r1q":0.0005,"r2q":0.0133},"prelude":[]}"#;
    let c = parse_config(text.as_bytes()).unwrap();
    assert_eq!(c.noise.r1q, 5e-4);
    assert_eq!(c.noise.r2q, 13.3e-3);
    assert_eq!(parse_config(c.to_json().as_bytes()).unwrap(), c);
}

fn z0(c: &Circuit, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_product_state(c.num_qubits(), &mut rng).unwrap();
    s.apply_circuit(c).unwrap();
    s.expectation_z(c.measured_qubit().unwrap_or(0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn benign_compile_is_transparent(seed in any::<u64>(), n in 2usize..=6, idle in 0usize..3) {
        // a circuit on n qubits padded with `idle` unused wires
        let mut body = random_circuit(seed, n, 20, 1);
        for q in 0..n {
            body.ry(q, 0.1 + q as f64).unwrap();
        }
        let mut c = body.widened(n + idle).unwrap();
        c.set_measured_qubit(Some(0)).unwrap();
        let config = DeviceConfig::benign("d", n + idle, NoiseSpec::IDEAL);
        let p = compile(&c.clone().into(), &config, true).unwrap().to_circuit().unwrap();
        let reference = body.clone();
        for k in 0..10 {
            prop_assert!((z0(&p, k) - z0(&reference, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn cancellation_preserves_unitary(seed in any::<u64>(), n in 1usize..=4) {
        // sandwich random ops with their inverses so there is something to cancel
        let base = random_circuit(seed, n, 10, 1);
        let mut c = Circuit::new(n).unwrap();
        for op in base.ops() {
            c.push(op.clone()).unwrap();
            if seed % 2 == 0 {
                c.push(op.inverse()).unwrap();
                c.push(op.clone()).unwrap();
            }
        }
        let out = cancel_adjacent_inverses(&c).unwrap();
        prop_assert!(out.len() <= c.len());
        prop_assert!(max_diff(&circuit_unitary(&out), &circuit_unitary(&c)) < 1e-10);
    }

    #[test]
    fn optimized_equals_raw(seed in any::<u64>(), n in 1usize..=4) {
        let mut c = Circuit::new(n).unwrap();
        for q in 0..n {
            c.ry(q, 0.123).unwrap();
        }
        c.append(&random_circuit(seed, n, 15, 1)).unwrap();
        for q in 0..n {
            c.ry(q, 0.456).unwrap();
        }
        let c = c.widened(n + 1).unwrap();
        let config = DeviceConfig::benign("d", n + 1, NoiseSpec::IDEAL);
        let passes = Passes { eliminate_idle: true, cancel_inverses: true };
        let p = compile_with(&c.clone().into(), &config, passes).unwrap().to_circuit().unwrap();
        prop_assert!(verify_equivalence(&p, &c, 8, seed).unwrap());
    }
}
