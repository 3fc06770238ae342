use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// A scalar loss together with its gradient with respect to the logits.
#[derive(Debug, Clone)]
pub struct LossOutput<S> {
    pub loss: S,
    pub grad: Tensor<S>,
}

fn check_logits<S: Real>(logits: &Tensor<S>) -> Result<(usize, usize)> {
    if logits.shape().len() != 2 {
        return Err(Error::Shape(format!(
            "logits must be [m, classes], got {:?}",
            logits.shape()
        )));
    }
    Ok((logits.shape()[0], logits.shape()[1]))
}

/// Per-row `(log-sum-exp, softmax)` computed with the max shift.
fn log_softmax_row<S: Real>(row: &[S], probs: &mut [S]) -> S {
    let max = row.iter().copied().fold(S::neg_infinity(), S::max);
    let mut total = S::zero();
    for (p, &z) in probs.iter_mut().zip(row) {
        *p = (z - max).exp();
        total = total + *p;
    }
    for p in probs.iter_mut() {
        *p = *p / total;
    }
    max + total.ln()
}

/// Softmax probabilities per row.
pub fn softmax<S: Real>(logits: &Tensor<S>) -> Result<Tensor<S>> {
    let (m, c) = check_logits(logits)?;
    let mut out = Tensor::zeros(&[m, c]);
    for i in 0..m {
        let mut probs = alloc::vec![S::zero(); c];
        log_softmax_row(logits.row(i), &mut probs);
        out.row_mut(i).copy_from_slice(&probs);
    }
    Ok(out)
}

/// Cross-entropy of each row against its label.
pub fn per_sample_cross_entropy<S: Real>(logits: &Tensor<S>, labels: &[usize]) -> Result<Vec<S>> {
    let (m, c) = check_logits(logits)?;
    check_labels(m, c, labels)?;
    let mut probs = alloc::vec![S::zero(); c];
    Ok((0..m)
        .map(|i| {
            let row = logits.row(i);
            let lse = log_softmax_row(row, &mut probs);
            (lse - row[labels[i]]).max(S::zero())
        })
        .collect())
}

fn check_labels(m: usize, c: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != m {
        return Err(Error::Shape(format!("{} labels for {m} rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {c} classes"
        )));
    }
    Ok(())
}

/// Mean softmax cross-entropy over the batch.
pub fn softmax_cross_entropy<S: Real>(logits: &Tensor<S>, labels: &[usize]) -> Result<LossOutput<S>> {
    let (m, c) = check_logits(logits)?;
    check_labels(m, c, labels)?;
    let inv_m = S::one() / S::of(m as f64);
    let mut grad = Tensor::zeros(&[m, c]);
    let mut total = S::zero();
    let mut probs = alloc::vec![S::zero(); c];
    for i in 0..m {
        let row = logits.row(i);
        let lse = log_softmax_row(row, &mut probs);
        total = total + (lse - row[labels[i]]).max(S::zero());
        let g = grad.row_mut(i);
        for j in 0..c {
            g[j] = probs[j] * inv_m;
        }
        g[labels[i]] = g[labels[i]] - inv_m;
    }
    Ok(LossOutput {
        loss: total * inv_m,
        grad,
    })
}

/// Sigmoid binary cross-entropy against soft targets, averaged over batch
/// and classes, divided by the sum-group count `k`.
pub fn mixed_bce_loss<S: Real>(
    logits: &Tensor<S>,
    soft_targets: &Tensor<S>,
    k: usize,
) -> Result<LossOutput<S>> {
    if k == 0 {
        return Err(Error::InvalidInput("group count must be positive".into()));
    }
    soft_bce_loss(logits, soft_targets, k as f64)
}

/// [`mixed_bce_loss`] with a real-valued divisor, for weighted groups whose
/// effective size is fractional.
pub fn soft_bce_loss<S: Real>(
    logits: &Tensor<S>,
    soft_targets: &Tensor<S>,
    divisor: f64,
) -> Result<LossOutput<S>> {
    let (m, c) = check_logits(logits)?;
    if soft_targets.shape() != logits.shape() {
        return Err(Error::Shape(format!(
            "targets {:?} do not match logits {:?}",
            soft_targets.shape(),
            logits.shape()
        )));
    }
    if !(divisor > 0.0 && divisor.is_finite()) {
        return Err(Error::InvalidInput(format!("divisor {divisor} must be positive")));
    }
    if let Some(bad) = soft_targets
        .data()
        .iter()
        .find(|&&y| !(y >= S::zero() && y <= S::one()))
    {
        return Err(Error::InvalidInput(format!("target {bad:?} outside [0, 1]")));
    }
    let scale = S::one() / S::of((m * c) as f64 * divisor);
    let mut total = S::zero();
    let mut grad = Tensor::zeros(&[m, c]);
    for ((&z, &y), g) in logits.data().iter().zip(soft_targets.data()).zip(grad.data_mut()) {
        // max(z, 0) - z*y + ln(1 + e^-|z|)
        total = total + z.max(S::zero()) - z * y + (-z.abs()).exp().ln_1p();
        let sig = if z >= S::zero() {
            S::one() / (S::one() + (-z).exp())
        } else {
            let e = z.exp();
            e / (S::one() + e)
        };
        *g = (sig - y) * scale;
    }
    Ok(LossOutput {
        loss: total * scale,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_classes() {
        let logits = Tensor::<f64>::zeros(&[3, 10]);
        let out = softmax_cross_entropy(&logits, &[0, 4, 9]).unwrap();
        assert!((out.loss - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn large_margin_drives_loss_to_zero() {
        let logits = Tensor::<f64>::from_f64(&[1, 3], &[800.0, 0.0, 0.0]).unwrap();
        let out = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!(out.loss >= 0.0 && out.loss < 1e-300);
    }

    #[test]
    fn out_of_range_label_rejected() {
        let logits = Tensor::<f64>::zeros(&[1, 3]);
        assert!(matches!(
            softmax_cross_entropy(&logits, &[3]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn bce_k1_matches_textbook_formula() {
        let z = [0.3f64, -1.2, 2.0];
        let y = [1.0f64, 0.0, 0.0];
        let logits = Tensor::<f64>::from_f64(&[1, 3], &z).unwrap();
        let t = Tensor::from_f64(&[1, 3], &y).unwrap();
        let out = mixed_bce_loss(&logits, &t, 1).unwrap();
        let expect: f64 = z
            .iter()
            .zip(&y)
            .map(|(&z, &y)| {
                let s = 1.0 / (1.0 + (-z).exp());
                -(y * s.ln() + (1.0 - y) * (1.0 - s).ln())
            })
            .sum::<f64>()
            / 3.0;
        assert!((out.loss - expect).abs() < 1e-14);
    }

    #[test]
    fn bce_k2_halves_loss() {
        let logits = Tensor::<f64>::from_f64(&[2, 2], &[0.5, -0.25, 1.5, 3.0]).unwrap();
        let t = Tensor::from_f64(&[2, 2], &[0.5, 0.5, 1.0, 0.0]).unwrap();
        let one = mixed_bce_loss(&logits, &t, 1).unwrap();
        let two = mixed_bce_loss(&logits, &t, 2).unwrap();
        assert_eq!(two.loss, one.loss / 2.0);
        let frac = soft_bce_loss(&logits, &t, 1.5).unwrap();
        assert!((frac.loss - one.loss / 1.5).abs() < 1e-15);
        assert!(soft_bce_loss(&logits, &t, 0.0).is_err());
        assert!(mixed_bce_loss(&logits, &t, 0).is_err());
    }

    #[test]
    fn bce_rejects_bad_targets() {
        let logits = Tensor::<f64>::zeros(&[1, 2]);
        let t = Tensor::from_f64(&[1, 2], &[1.5, 0.0]).unwrap();
        assert!(matches!(
            mixed_bce_loss(&logits, &t, 1),
            Err(Error::InvalidInput(_))
        ));
        let t = Tensor::from_f64(&[1, 3], &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(mixed_bce_loss(&logits, &t, 1), Err(Error::Shape(_))));
    }
}
