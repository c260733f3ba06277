use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainingError};
use crate::model::{is_no_decay, EncoderState};
use crate::Scalar;

/// Adam first/second moments, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub m: EncoderState<T>,
    pub v: EncoderState<T>,
    pub step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &EncoderState<T>) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// Linear warmup to `peak` over `warmup` steps, then linear decay to 0 at
/// step `total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub peak: f64,
    pub warmup: u64,
    pub total: u64,
}

impl Schedule {
    /// Learning rate for the 1-based optimizer step `step`.
    pub fn lr(&self, step: u64) -> f64 {
        if step < self.warmup {
            self.peak * step as f64 / self.warmup as f64
        } else if step >= self.total {
            0.0
        } else {
            self.peak * (self.total - step) as f64 / (self.total - self.warmup) as f64
        }
    }
}

/// Scales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut EncoderState<T>, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(T::of(max_norm / norm));
    }
    norm
}

/// One bias-corrected Adam update with decoupled weight decay on a flat
/// parameter slice. `step` is the 1-based count including this update.
#[allow(clippy::too_many_arguments)]
pub fn adam_update<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    step: u64,
    lr: f64,
    betas: (f64, f64),
    epsilon: f64,
    weight_decay: f64,
) {
    let (b1, b2) = betas;
    let c1 = T::of(1.0 - b1.powi(step as i32));
    let c2 = T::of(1.0 - b2.powi(step as i32));
    let (b1, b2) = (T::of(b1), T::of(b2));
    let (lr, eps, wd) = (T::of(lr), T::of(epsilon), T::of(weight_decay));
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (T::one() - b1) * g;
        v[i] = b2 * v[i] + (T::one() - b2) * g * g;
        let update = (m[i] / c1) / ((v[i] / c2).sqrt() + eps) + wd * param[i];
        param[i] -= lr * update;
    }
}

/// Applies AdamW to every tensor. Biases and layer-norm parameters get no
/// weight decay. Non-finite gradients leave everything untouched.
pub fn optimizer_step<T: Scalar>(
    state: &mut EncoderState<T>,
    grads: &EncoderState<T>,
    opt: &mut OptimizerState<T>,
    lr: f64,
    config: &TrainConfig,
) -> Result<(), TrainingError> {
    if !grads.all_finite() {
        return Err(TrainingError::NonFiniteGradient { step: opt.step + 1 });
    }
    opt.step += 1;
    let names = state.names();
    let params = state.tensors_mut();
    let ms = opt.m.tensors_mut();
    let vs = opt.v.tensors_mut();
    for ((((name, p), g), m), v) in names.iter().zip(params).zip(grads.tensors()).zip(ms).zip(vs) {
        let wd = if is_no_decay(name) {
            0.0
        } else {
            config.weight_decay
        };
        adam_update(
            p.data_mut(),
            g.data(),
            m.data_mut(),
            v.data_mut(),
            opt.step,
            lr,
            (config.adam_beta1, config.adam_beta2),
            config.adam_epsilon,
            wd,
        );
    }
    Ok(())
}
