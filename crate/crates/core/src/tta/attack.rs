use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{preprocess, PreprocessConfig};
use crate::error::{Error, Result};
use crate::nn::{softmax_cross_entropy, Network};
use crate::real::Real;
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackKind {
    Fgsm,
    Pgd { step_size: f64, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// Max-norm budget in pixel units.
    pub epsilon: f64,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "attack ε = {} must be nonnegative",
                self.epsilon
            )));
        }
        if let AttackKind::Pgd { step_size, steps } = self.kind {
            if steps == 0 || !(step_size >= 0.0) {
                return Err(Error::Config(format!(
                    "PGD needs steps ≥ 1 and α ≥ 0, got {steps} and {step_size}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self.kind {
            AttackKind::Fgsm => format!("fgsm_eps{}", self.epsilon),
            AttackKind::Pgd { step_size, steps } => {
                format!("pgd_eps{}_alpha{}_steps{steps}", self.epsilon, step_size)
            }
        }
    }
}

/// Sign of the cross-entropy gradient with respect to raw pixels. The
/// normalization divides by positive deviations, so signs carry over from
/// the normalized input.
fn gradient_sign<S: Real>(
    net: &Network<S>,
    images: &Tensor<S>,
    labels: &[usize],
    pre: &PreprocessConfig,
) -> Result<Vec<S>> {
    let mut net = net.clone();
    let mut unused = rng::stream(0, &[]);
    let inputs = preprocess(images, pre, &mut unused, false)?;
    let logits = net.forward_train(&inputs)?;
    let loss = softmax_cross_entropy(&logits, labels)?;
    let grads = net.backward(&loss.grad)?;
    Ok(grads
        .input
        .data()
        .iter()
        .map(|&g| {
            if g > S::zero() {
                S::one()
            } else if g < S::zero() {
                -S::one()
            } else {
                S::zero()
            }
        })
        .collect())
}

fn clip01<S: Real>(x: S) -> S {
    x.max(S::zero()).min(S::one())
}

/// `clip(x + ε·sign(∇ₓ loss), 0, 1)` for a batch of raw images.
pub fn fgsm<S: Real>(
    net: &Network<S>,
    images: &Tensor<S>,
    labels: &[usize],
    epsilon: f64,
    pre: &PreprocessConfig,
) -> Result<Tensor<S>> {
    let sign = gradient_sign(net, images, labels, pre)?;
    let eps = S::of(epsilon);
    let data = images
        .data()
        .iter()
        .zip(&sign)
        .map(|(&x, &s)| clip01(x + eps * s))
        .collect();
    Tensor::from_vec(images.shape(), data)
}

/// Iterated signed ascent from the clean images, projected onto the ε
/// max-norm ball and `[0, 1]` after every step.
pub fn pgd<S: Real>(
    net: &Network<S>,
    images: &Tensor<S>,
    labels: &[usize],
    epsilon: f64,
    step_size: f64,
    steps: usize,
    pre: &PreprocessConfig,
) -> Result<Tensor<S>> {
    if steps == 0 {
        return Err(Error::Config("PGD needs at least one step".into()));
    }
    let (eps, alpha) = (S::of(epsilon), S::of(step_size));
    let mut x = images.clone();
    for _ in 0..steps {
        let sign = gradient_sign(net, &x, labels, pre)?;
        for ((v, &x0), &s) in x.data_mut().iter_mut().zip(images.data()).zip(&sign) {
            let moved = (*v + alpha * s).max(x0 - eps).min(x0 + eps);
            *v = clip01(moved);
        }
    }
    Ok(x)
}

/// Runs an attack over a large set in chunks of `batch_size`.
pub fn attack_batch<S: Real>(
    net: &Network<S>,
    images: &Tensor<S>,
    labels: &[usize],
    attack: &AttackConfig,
    pre: &PreprocessConfig,
    batch_size: usize,
) -> Result<Tensor<S>> {
    attack.validate()?;
    let row_shape = &images.shape()[1..];
    let mut out = Vec::with_capacity(images.len());
    for start in (0..labels.len()).step_by(batch_size.max(1)) {
        let end = (start + batch_size.max(1)).min(labels.len());
        let rows: Vec<&[S]> = (start..end).map(|i| images.row(i)).collect();
        let chunk = Tensor::stack(row_shape, &rows)?;
        let adv = match attack.kind {
            AttackKind::Fgsm => fgsm(net, &chunk, &labels[start..end], attack.epsilon, pre)?,
            AttackKind::Pgd { step_size, steps } => pgd(
                net,
                &chunk,
                &labels[start..end],
                attack.epsilon,
                step_size,
                steps,
                pre,
            )?,
        };
        out.extend_from_slice(adv.data());
    }
    Tensor::from_vec(images.shape(), out)
}
