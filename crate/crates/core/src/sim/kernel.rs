//! Bit-masked amplitude updates shared by the statevector and the
//! vectorized density matrix.

use num_complex::Complex64;

use super::gate::GateMatrix;

#[inline]
fn insert_zero_bit(i: usize, bit: usize) -> usize {
    let low = i & ((1 << bit) - 1);
    ((i >> bit) << (bit + 1)) | low
}

/// Applies `m` to `targets` on the subspace where every bit of `ctrl_mask` is set.
pub(crate) fn apply_matrix(amps: &mut [Complex64], targets: &[usize], ctrl_mask: usize, m: &GateMatrix) {
    match m {
        GateMatrix::One(m) => apply_one(amps, targets[0], ctrl_mask, m),
        GateMatrix::Two(m) => apply_two(amps, targets[0], targets[1], ctrl_mask, m),
    }
}

fn apply_one(amps: &mut [Complex64], target: usize, ctrl_mask: usize, m: &[[Complex64; 2]; 2]) {
    let tb = 1usize << target;
    let half = amps.len() / 2;
    let diagonal = m[0][1] == Complex64::new(0.0, 0.0) && m[1][0] == Complex64::new(0.0, 0.0);
    let flip = m[0][0] == Complex64::new(0.0, 0.0)
        && m[1][1] == Complex64::new(0.0, 0.0)
        && m[0][1] == Complex64::new(1.0, 0.0)
        && m[1][0] == Complex64::new(1.0, 0.0);
    for k in 0..half {
        let i = insert_zero_bit(k, target);
        if i & ctrl_mask != ctrl_mask {
            continue;
        }
        let j = i | tb;
        if flip {
            amps.swap(i, j);
        } else if diagonal {
            amps[i] *= m[0][0];
            amps[j] *= m[1][1];
        } else {
            let (a, b) = (amps[i], amps[j]);
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn apply_two(amps: &mut [Complex64], t0: usize, t1: usize, ctrl_mask: usize, m: &[[Complex64; 4]; 4]) {
    let (b0, b1) = (1usize << t0, 1usize << t1);
    let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
    let quarter = amps.len() / 4;
    for k in 0..quarter {
        let base = insert_zero_bit(insert_zero_bit(k, lo), hi);
        if base & ctrl_mask != ctrl_mask {
            continue;
        }
        let idx = [base, base | b0, base | b1, base | b0 | b1];
        let v = idx.map(|i| amps[i]);
        for (r, &i) in idx.iter().enumerate() {
            let row = &m[r];
            amps[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    }
}

pub(crate) fn control_mask(controls: &[usize], offset: usize) -> usize {
    controls.iter().fold(0, |acc, &c| acc | (1 << (c + offset)))
}
