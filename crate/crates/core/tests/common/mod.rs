#![allow(dead_code)]

//! Reference implementations built from dense matrices and Kronecker
//! products, sharing no code with the library's kernels.

use num_complex::Complex64 as C;
use qupt::sim::{Circuit, GateKind, GateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(dim: usize) -> Mat {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![c(0.0, 0.0); m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x == c(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    let n = a.len();
    (0..a[0].len()).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn scale(a: &Mat, k: C) -> Mat {
    a.iter().map(|r| r.iter().map(|x| x * k).collect()).collect()
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

pub fn apply(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `|i⟩⟨j|` on one qubit.
fn unit(i: usize, j: usize) -> Mat {
    let mut m = vec![vec![c(0.0, 0.0); 2]; 2];
    m[i][j] = c(1.0, 0.0);
    m
}

/// Kronecker chain over `n` qubits with `factors[q]` on qubit `q`; qubit 0
/// is the least significant index bit, so it is the rightmost factor.
pub fn chain(n: usize, factors: &[(usize, Mat)]) -> Mat {
    let mut out = vec![vec![c(1.0, 0.0)]];
    for q in (0..n).rev() {
        let f = factors
            .iter()
            .find(|(t, _)| *t == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| identity(2));
        out = kron(&out, &f);
    }
    out
}

pub fn pauli_x() -> Mat {
    vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn pauli_y() -> Mat {
    vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn pauli_z() -> Mat {
    vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]
}

fn rz(t: f64) -> Mat {
    vec![
        vec![C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), C::from_polar(1.0, t / 2.0)],
    ]
}

fn ry(t: f64) -> Mat {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
}

/// exp(−i t/2 · G) for an involutory generator G.
fn exp_involution(g: &Mat, t: f64) -> Mat {
    let n = g.len();
    add(&scale(&identity(n), c((t / 2.0).cos(), 0.0)), &scale(g, c(0.0, -(t / 2.0).sin())))
}

/// Local matrix of an uncontrolled gate; two-target gates are in the
/// `kron(second target, first target)` basis.
pub fn local_matrix(kind: GateKind, p: &[f64]) -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]],
        GateKind::X | GateKind::CNOT => pauli_x(),
        GateKind::RX => exp_involution(&pauli_x(), p[0]),
        GateKind::RY => ry(p[0]),
        GateKind::RZ | GateKind::CRZ => rz(p[0]),
        GateKind::Rot => matmul(&rz(p[2]), &matmul(&ry(p[1]), &rz(p[0]))),
        GateKind::SWAP => {
            let mut m = vec![vec![c(0.0, 0.0); 4]; 4];
            for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[i][j] = c(1.0, 0.0);
            }
            m
        }
        GateKind::IsingXX => exp_involution(&kron(&pauli_x(), &pauli_x()), p[0]),
        GateKind::IsingYY => exp_involution(&kron(&pauli_y(), &pauli_y()), p[0]),
        GateKind::IsingZZ => exp_involution(&kron(&pauli_z(), &pauli_z()), p[0]),
    }
}

/// Full `2^n × 2^n` matrix of a gate, controls included.
pub fn full_matrix(n: usize, op: &GateOp) -> Mat {
    let local = local_matrix(op.kind, &op.params);
    let u = if op.targets.len() == 1 {
        let mut acc = vec![vec![c(0.0, 0.0); 1 << n]; 1 << n];
        for i in 0..2 {
            for j in 0..2 {
                if local[i][j] != c(0.0, 0.0) {
                    acc = add(&acc, &scale(&chain(n, &[(op.targets[0], unit(i, j))]), local[i][j]));
                }
            }
        }
        acc
    } else {
        let mut acc = vec![vec![c(0.0, 0.0); 1 << n]; 1 << n];
        for a in 0..4 {
            for b in 0..4 {
                // row index a = a1·2 + a0 in the kron(second, first) basis
                let coef = local[a][b];
                if coef == c(0.0, 0.0) {
                    continue;
                }
                let f0 = unit(a & 1, b & 1);
                let f1 = unit(a >> 1, b >> 1);
                acc = add(&acc, &scale(&chain(n, &[(op.targets[0], f0), (op.targets[1], f1)]), coef));
            }
        }
        acc
    };
    if op.controls.is_empty() {
        return u;
    }
    let proj: Vec<(usize, Mat)> = op.controls.iter().map(|&q| (q, unit(1, 1))).collect();
    let p = chain(n, &proj);
    let rest = add(&identity(1 << n), &scale(&p, c(-1.0, 0.0)));
    add(&rest, &matmul(&p, &u))
}

pub fn circuit_unitary(circuit: &Circuit) -> Mat {
    let n = circuit.num_qubits();
    circuit
        .ops()
        .iter()
        .fold(identity(1 << n), |acc, op| matmul(&full_matrix(n, op), &acc))
}

pub fn basis(n: usize, idx: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[idx] = c(1.0, 0.0);
    v
}

pub fn oracle_state(circuit: &Circuit, input: &[C]) -> Vec<C> {
    let n = circuit.num_qubits();
    circuit
        .ops()
        .iter()
        .fold(input.to_vec(), |v, op| apply(&full_matrix(n, op), &v))
}

pub fn z_expectation(v: &[C], qubit: usize) -> f64 {
    v.iter()
        .enumerate()
        .map(|(i, a)| if i >> qubit & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// ρ → (1−p)ρ + p/(4^k−1) Σ_{P≠I} PρP with dense Pauli strings.
pub fn depolarize_dense(rho: &Mat, n: usize, support: &[usize], p: f64) -> Mat {
    if p == 0.0 {
        return rho.clone();
    }
    let paulis = [identity(2), pauli_x(), pauli_y(), pauli_z()];
    let k = support.len();
    let strings = (1usize << (2 * k)) - 1;
    let mut acc = scale(rho, c(1.0 - p, 0.0));
    for code in 1..=strings {
        let factors: Vec<(usize, Mat)> = support
            .iter()
            .enumerate()
            .map(|(j, &q)| (q, paulis[(code >> (2 * j)) & 3].clone()))
            .collect();
        let pm = chain(n, &factors);
        acc = add(&acc, &scale(&matmul(&pm, &matmul(rho, &pm)), c(p / strings as f64, 0.0)));
    }
    acc
}

/// Gate-then-depolarize evolution with one noise event per gate on the
/// first two qubits of targets-then-controls.
pub fn noisy_density_oracle(circuit: &Circuit, rho0: &Mat, r1q: f64, r2q: f64) -> Mat {
    let n = circuit.num_qubits();
    let mut rho = rho0.clone();
    for op in circuit.ops() {
        let u = full_matrix(n, op);
        rho = matmul(&u, &matmul(&rho, &dagger(&u)));
        let support: Vec<usize> = op.targets.iter().chain(&op.controls).copied().take(2).collect();
        let p = if support.len() == 1 { r1q } else { r2q };
        rho = depolarize_dense(&rho, n, &support, p);
    }
    rho
}

pub fn pure_density(v: &[C]) -> Mat {
    v.iter().map(|a| v.iter().map(|b| a * b.conj()).collect()).collect()
}

pub fn density_z(rho: &Mat, qubit: usize) -> f64 {
    (0..rho.len())
        .map(|i| if i >> qubit & 1 == 0 { rho[i][i].re } else { -rho[i][i].re })
        .sum()
}

/// Every kind with valid qubits and random parameters, with up to
/// `max_extra_controls` added controls.
pub fn random_op<R: Rng>(rng: &mut R, n: usize, max_extra_controls: usize) -> GateOp {
    loop {
        let kind = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
        let needed = kind.arity() + kind.intrinsic_controls();
        if needed > n {
            continue;
        }
        let mut qubits: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = rng.gen_range(i..n);
            qubits.swap(i, j);
        }
        let spare = n - needed;
        let extra = rng.gen_range(0..=max_extra_controls.min(spare));
        let targets = qubits[..kind.arity()].to_vec();
        let controls = qubits[kind.arity()..needed + extra].to_vec();
        let params = (0..kind.param_count())
            .map(|_| rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI))
            .collect();
        return GateOp::new(kind, targets, controls, params).expect("valid by construction");
    }
}

pub fn random_circuit(seed: u64, n: usize, len: usize, max_extra_controls: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circ = Circuit::new(n).unwrap();
    for _ in 0..len {
        circ.push(random_op(&mut rng, n, max_extra_controls)).unwrap();
    }
    circ
}

pub fn max_state_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Central finite differences.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
