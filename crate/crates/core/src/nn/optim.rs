use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// SGD hyper-parameters and per-parameter momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<S> {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub nesterov: bool,
    pub velocity: Vec<Tensor<S>>,
}

impl<S: Real> OptimizerState<S> {
    pub fn new(
        params: &[Tensor<S>],
        learning_rate: f64,
        momentum: f64,
        weight_decay: f64,
        nesterov: bool,
    ) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {learning_rate} must be positive"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!("momentum {momentum} outside [0, 1)")));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight decay {weight_decay} must be nonnegative"
            )));
        }
        Ok(OptimizerState {
            learning_rate,
            momentum,
            weight_decay,
            nesterov,
            velocity: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        })
    }
}

/// One SGD update.
///
/// With `g' = g + wd * θ`: `v ← μ v + g'`, then `θ ← θ − lr (g' + μ v)` for
/// Nesterov or `θ ← θ − lr v` otherwise.
pub fn sgd_step<S: Real>(
    params: &mut [Tensor<S>],
    grads: &[Tensor<S>],
    opt: &mut OptimizerState<S>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != opt.velocity.len() {
        return Err(Error::Shape(format!(
            "{} parameters, {} gradients, {} velocities",
            params.len(),
            grads.len(),
            opt.velocity.len()
        )));
    }
    for ((p, g), v) in params.iter().zip(grads).zip(&opt.velocity) {
        p.check_same_shape(g)?;
        p.check_same_shape(v)?;
    }
    let lr = S::of(opt.learning_rate);
    let mu = S::of(opt.momentum);
    let wd = S::of(opt.weight_decay);
    for ((p, g), v) in params.iter_mut().zip(grads).zip(opt.velocity.iter_mut()) {
        for ((theta, &grad), vel) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut().iter_mut()) {
            let eff = grad + wd * *theta;
            *vel = mu * *vel + eff;
            let update = if opt.nesterov { eff + mu * *vel } else { *vel };
            *theta = *theta - lr * update;
        }
    }
    Ok(())
}

/// Learning-rate schedules. Neither is applied unless configured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Multiply by `factor` every `epochs` epochs.
    StepEvery { epochs: u64, factor: f64 },
    /// Multiply by `factor` once the test loss has not improved by more than
    /// `min_delta` for `patience_steps` gradient steps.
    OnPlateau {
        patience_steps: u64,
        factor: f64,
        min_delta: f64,
    },
}
