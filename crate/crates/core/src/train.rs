//! Binary cross-entropy training with Adam and parameter-shift gradients.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnn::{
    self, downsample_weights, filter_template, sigmoid, vqc_template, Backend, CrzForm, Image, QnnParams, MAP_SIDE,
    PARAM_COUNT, VQC_OFFSET, VQC_QUBITS,
};

/// Probability clamp used by [`bce_loss`].
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    ParameterShift,
    /// Central differences; for gradient checks, not accepted by [`train`].
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr0: f64,
    pub step_size: usize,
    pub gamma: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub gradient_mode: GradientMode,
    /// Initial angles are uniform in `[−init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 1e-4,
            step_size: 10,
            gamma: 0.75,
            batch_size: 64,
            epochs: 100,
            seed: 0,
            gradient_mode: GradientMode::ParameterShift,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    /// Short run for 200-image sets: 15 epochs at a larger step.
    pub fn desk_scale(seed: u64) -> Self {
        TrainConfig {
            lr0: 0.05,
            epochs: 15,
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_owned()));
        if !self.lr0.is_finite() || self.lr0 < 0.0 {
            return bad("lr0 must be finite and non-negative");
        }
        if self.step_size == 0 {
            return bad("scheduler step size must be positive");
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("scheduler gamma must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad("init scale must be non-negative");
        }
        Ok(())
    }
}

/// −[y ln p + (1−y) ln(1−p)] with `p` clamped into `[1e-7, 1−1e-7]`.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `lr0 · γ^⌊epoch / step⌋`
pub fn lr_at_epoch(epoch: usize, config: &TrainConfig) -> f64 {
    config.lr0 * config.gamma.powi((epoch / config.step_size) as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            expected: state.m.len(),
            got: params.len().max(grads.len()),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Uniform initial angles in `[−scale, scale]` drawn from `seed`.
pub fn init_params(seed: u64, scale: f64) -> QnnParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> = (0..PARAM_COUNT).map(|_| rng.gen_range(-1.0..=1.0) * scale).collect();
    QnnParams::from_flat(&flat).expect("param count is fixed")
}

type PatchKey = [u64; 4];

fn patch_key(patch: &[f64; 4]) -> PatchKey {
    patch.map(f64::to_bits)
}

/// Filter value and its derivative with respect to the conv and pool angles.
#[derive(Debug, Clone)]
struct FilterGrad {
    value: f64,
    grad: Vec<f64>,
}

fn filter_grad(patch: &[f64; 4], params: &QnnParams) -> Result<FilterGrad> {
    let t = filter_template(patch, &params.conv, &params.pool, CrzForm::Decomposed)?;
    let (value, mut grad, _) = t.value_and_gradient(PARAM_COUNT, 0)?;
    grad.truncate(VQC_OFFSET);
    Ok(FilterGrad { value, grad })
}

/// Filter results for every distinct window in a batch.
struct FilterCache {
    entries: HashMap<PatchKey, FilterGrad>,
}

impl FilterCache {
    fn build(images: &[&Image], params: &QnnParams) -> Result<Self> {
        let mut keys: Vec<(PatchKey, [f64; 4])> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for img in images {
            for r in 0..MAP_SIDE {
                for c in 0..MAP_SIDE {
                    let p = img.patch(r, c);
                    if seen.insert(patch_key(&p)) {
                        keys.push((patch_key(&p), p));
                    }
                }
            }
        }
        let computed: Vec<FilterGrad> = keys
            .par_iter()
            .map(|(_, p)| filter_grad(p, params))
            .collect::<Result<_>>()?;
        Ok(FilterCache {
            entries: keys.into_iter().map(|(k, _)| k).zip(computed).collect(),
        })
    }

    fn get(&self, patch: &[f64; 4]) -> &FilterGrad {
        &self.entries[&patch_key(patch)]
    }
}

/// VQC ⟨Z₀⟩ for one image and its gradient over all 111 angles.
fn logit_and_gradient(image: &Image, params: &QnnParams, cache: &FilterCache) -> Result<(f64, Vec<f64>)> {
    let mut features = [0.0; VQC_QUBITS];
    for r in 0..MAP_SIDE {
        let w = downsample_weights(r);
        for c in 0..MAP_SIDE {
            let v = cache.get(&image.patch(r, c)).value;
            for (f, wk) in features.iter_mut().zip(w) {
                *f += wk * v;
            }
        }
    }
    let features = features.map(|v| ((v + 1.0) / 2.0).clamp(0.0, 1.0));
    let t = vqc_template(&features, &params.vqc, false)?;
    let (z, mut grad, dinputs) = t.value_and_gradient(PARAM_COUNT, VQC_QUBITS)?;
    for r in 0..MAP_SIDE {
        let w = downsample_weights(r);
        let a: f64 = w.iter().zip(&dinputs).map(|(wk, d)| wk * d / 2.0).sum();
        if a == 0.0 {
            continue;
        }
        for c in 0..MAP_SIDE {
            let g = &cache.get(&image.patch(r, c)).grad;
            for (acc, gi) in grad[..VQC_OFFSET].iter_mut().zip(g) {
                *acc += a * gi;
            }
        }
    }
    Ok((z, grad))
}

/// Per-sample loss and prediction gathered while computing a batch gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradient {
    pub loss: f64,
    pub probabilities: Vec<f64>,
    pub grad: Vec<f64>,
}

fn check_labels(batch: &[(Image, u8)]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if let Some((_, y)) = batch.iter().find(|(_, y)| *y > 1) {
        return Err(Error::InvalidArgument(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

/// Mean BCE loss over `batch` and its exact gradient over the flat angles.
pub fn param_shift_gradient(batch: &[(Image, u8)], params: &QnnParams, backend: &Backend) -> Result<BatchGradient> {
    if !matches!(backend, Backend::Ideal) {
        return Err(Error::NoisyGradient);
    }
    check_labels(batch)?;
    params.validate()?;
    let images: Vec<&Image> = batch.iter().map(|(img, _)| img).collect();
    let cache = FilterCache::build(&images, params)?;
    let per_sample: Vec<(f64, f64, Vec<f64>)> = batch
        .par_iter()
        .map(|(img, y)| {
            let (z, dz) = logit_and_gradient(img, params, &cache)?;
            let p = sigmoid(z);
            let loss = bce_loss(p, *y);
            let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            let dl_dp = if pc != p {
                0.0
            } else if *y == 1 {
                -1.0 / p
            } else {
                1.0 / (1.0 - p)
            };
            let scale = dl_dp * p * (1.0 - p);
            Ok((loss, p, dz.into_iter().map(|g| g * scale).collect()))
        })
        .collect::<Result<_>>()?;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut loss = 0.0;
    let mut probabilities = Vec::with_capacity(batch.len());
    for (l, p, g) in per_sample {
        loss += l;
        probabilities.push(p);
        for (a, gi) in grad.iter_mut().zip(g) {
            *a += gi;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(BatchGradient {
        loss: loss / n,
        probabilities,
        grad,
    })
}

/// Mean BCE loss over `batch` with the ideal forward pass.
pub fn batch_loss(batch: &[(Image, u8)], params: &QnnParams) -> Result<f64> {
    check_labels(batch)?;
    let losses: Vec<f64> = batch
        .par_iter()
        .map(|(img, y)| Ok(bce_loss(qnn::forward(img, params, &Backend::Ideal)?, *y)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / batch.len() as f64)
}

/// Central differences of `f` around `x` with step `h`.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// Fraction of consecutive epochs whose mean loss did not increase.
    pub fn non_increasing_fraction(&self) -> Option<f64> {
        if self.epochs.len() < 2 {
            return None;
        }
        let ok = self.epochs.windows(2).filter(|w| w[1].loss <= w[0].loss).count();
        Some(ok as f64 / (self.epochs.len() - 1) as f64)
    }

    /// `epoch,loss,accuracy,lr`
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epoch", "loss", "accuracy", "lr"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.loss.to_string(),
                e.accuracy.to_string(),
                e.lr.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Trains from [`init_params`].
pub fn train(data: &[(Image, u8)], config: &TrainConfig) -> Result<(QnnParams, TrainHistory)> {
    train_with(data, config, init_params(config.seed, config.init_scale), |_| {})
}

/// Trains from `initial`, calling `observe` after every epoch.
///
/// Epoch `e` shuffles with stream `e + 1` of the run seed. Loss and
/// accuracy are taken from the forward passes of the gradient steps.
pub fn train_with<F>(
    data: &[(Image, u8)],
    config: &TrainConfig,
    initial: QnnParams,
    mut observe: F,
) -> Result<(QnnParams, TrainHistory)>
where
    F: FnMut(&EpochRecord),
{
    config.validate()?;
    if config.gradient_mode != GradientMode::ParameterShift {
        return Err(Error::InvalidArgument(
            "training requires parameter-shift gradients".into(),
        ));
    }
    check_labels(data)?;
    let mut flat = initial.to_flat();
    let mut adam = AdamState::new(PARAM_COUNT);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch: Vec<(Image, u8)> = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(epoch, config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let params = QnnParams::from_flat(&flat)?;
            let g = param_shift_gradient(&batch, &params, &Backend::Ideal)?;
            loss_sum += g.loss * batch.len() as f64;
            correct += g
                .probabilities
                .iter()
                .zip(&batch)
                .filter(|(p, (_, y))| qnn::predict(**p, 0.5) == *y)
                .count();
            adam_step(&mut flat, &g.grad, &mut adam, lr)?;
        }
        let record = EpochRecord {
            epoch,
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
            lr,
        };
        observe(&record);
        history.epochs.push(record);
    }
    Ok((QnnParams::from_flat(&flat)?, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_examples() {
        assert!((bce_loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(0.5, 0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(1.0 - 1e-7, 1) - 1e-7).abs() < 1e-12);
        assert!((bce_loss(0.2, 1) - 1.6094379124341003).abs() < 1e-12);
        assert!(bce_loss(0.0, 1).is_finite());
        assert!(bce_loss(1.0, 0).is_finite());
    }

    #[test]
    fn schedule_examples() {
        let c = TrainConfig::default();
        assert_eq!(lr_at_epoch(0, &c), 1e-4);
        assert!((lr_at_epoch(10, &c) / 7.5e-5 - 1.0).abs() < 1e-14);
        assert!((lr_at_epoch(25, &c) / 5.625e-5 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adam_first_step() {
        let mut p = [1.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[0.5], &mut s, 0.1).unwrap();
        // m̂ = 0.5, v̂ = 0.25, Δ = −0.1·0.5/(0.5+1e-8)
        let expected = -0.1 * 0.5 / (0.5 + 1e-8);
        assert!((p[0] - 1.0 - expected).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn adam_zero_gradient_decays_moments() {
        let mut p = [0.3, -0.2];
        let mut s = AdamState::new(2);
        s.m = vec![1.0, 1.0];
        s.v = vec![1.0, 1.0];
        let mut q = p;
        let mut fresh = AdamState::new(2);
        adam_step(&mut q, &[0.0, 0.0], &mut fresh, 0.1).unwrap();
        assert_eq!(q, p);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.0).unwrap();
        assert_eq!(s.m, vec![0.9, 0.9]);
        assert!((s.v[0] - 0.999).abs() < 1e-15);
    }

    #[test]
    fn adam_dimension_check() {
        let mut s = AdamState::new(3);
        assert!(adam_step(&mut [0.0; 2], &[0.0; 2], &mut s, 0.1).is_err());
    }

    #[test]
    fn noisy_backend_rejected() {
        let data = vec![(Image::constant(0.0).unwrap(), 0)];
        let backend = Backend::Noisy {
            noise: crate::noise::NoiseSpec::ARIA_1,
            plan: crate::noise::TrajectoryPlan::exact(2, 0),
        };
        assert!(matches!(
            param_shift_gradient(&data, &QnnParams::zeros(), &backend),
            Err(Error::NoisyGradient)
        ));
    }

    #[test]
    fn zero_lr_leaves_params() {
        let data = vec![(Image::constant(0.3).unwrap(), 1)];
        let config = TrainConfig {
            lr0: 0.0,
            epochs: 1,
            seed: 4,
            ..TrainConfig::default()
        };
        let (p, h) = train(&data, &config).unwrap();
        assert_eq!(p, init_params(4, 0.1));
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let config = TrainConfig::default();
        assert!(train(&[], &config).is_err());
        let bad = vec![(Image::constant(0.0).unwrap(), 3)];
        assert!(train(&bad, &config).is_err());
        let fd = TrainConfig {
            gradient_mode: GradientMode::FiniteDifference,
            ..TrainConfig::default()
        };
        assert!(train(&[(Image::constant(0.0).unwrap(), 0)], &fd).is_err());
    }

    #[test]
    fn init_in_range_and_seeded() {
        let a = init_params(9, 0.1).to_flat();
        assert!(a.iter().all(|v| v.abs() <= 0.1));
        assert_eq!(a, init_params(9, 0.1).to_flat());
        assert_ne!(a, init_params(10, 0.1).to_flat());
    }

    #[test]
    fn history_csv() {
        let h = TrainHistory {
            epochs: vec![EpochRecord {
                epoch: 0,
                loss: 0.5,
                accuracy: 1.0,
                lr: 1e-4,
            }],
        };
        assert_eq!(h.to_csv().unwrap(), "epoch,loss,accuracy,lr\n0,0.5,1,0.0001\n");
    }
}
