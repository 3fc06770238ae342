use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Batch of `m / K` mixed inputs with soft targets.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedBatch<S> {
    pub inputs: Tensor<S>,
    pub soft_targets: Tensor<S>,
    pub group_count: usize,
}

fn check(batch_rows: usize, labels: usize, k: usize) -> Result<usize> {
    if labels != batch_rows {
        return Err(Error::Shape(format!("{labels} labels for {batch_rows} samples")));
    }
    if k == 0 || !batch_rows.is_multiple_of(k) {
        return Err(Error::Config(format!(
            "group count {k} must divide the batch size {batch_rows}"
        )));
    }
    Ok(batch_rows / k)
}

/// Splits the batch into `K` consecutive groups and averages the samples at
/// the same position of every group. Soft targets hold, per class, the
/// number of mixed samples with that label divided by `K`.
pub fn mix_batch_average<S: Real>(
    batch: &Tensor<S>,
    labels: &[usize],
    k: usize,
    num_classes: usize,
) -> Result<MixedBatch<S>> {
    check(batch.rows(), labels.len(), k)?;
    let coefficients = vec![1.0 / k as f64; k];
    mix_groups(batch, labels, &coefficients, num_classes)
}

/// Coefficient-weighted sum of the groups: output `i` is
/// `Σ_j C[j] · batch[i + j·(m/K)]` and group `j`'s label receives target
/// mass `C[j]`. `K` is the number of coefficients.
pub fn mix_batch_weighted<S: Real>(
    batch: &Tensor<S>,
    labels: &[usize],
    coefficients: &[f64],
    num_classes: usize,
) -> Result<MixedBatch<S>> {
    check(batch.rows(), labels.len(), coefficients.len())?;
    if coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "coefficients must be finite and nonnegative: {coefficients:?}"
        )));
    }
    mix_groups(batch, labels, coefficients, num_classes)
}

fn mix_groups<S: Real>(
    batch: &Tensor<S>,
    labels: &[usize],
    coefficients: &[f64],
    num_classes: usize,
) -> Result<MixedBatch<S>> {
    let k = coefficients.len();
    let groups = batch.rows() / k;
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidInput(format!("label {bad} out of range")));
    }
    let mut shape = batch.shape().to_vec();
    shape[0] = groups;
    let mut inputs = Tensor::zeros(&shape);
    let mut targets = Tensor::zeros(&[groups, num_classes]);
    for i in 0..groups {
        let out = inputs.row_mut(i);
        for (j, &c) in coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let w = S::of(c);
            let src = batch.row(i + j * groups);
            for (o, &x) in out.iter_mut().zip(src) {
                *o = *o + w * x;
            }
        }
        let t = targets.row_mut(i);
        for (j, &c) in coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let l = labels[i + j * groups];
            t[l] = t[l] + S::of(c);
        }
    }
    Ok(MixedBatch {
        inputs,
        soft_targets: targets,
        group_count: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_is_identity_with_one_hot_targets() {
        let b = Tensor::<f64>::from_f64(&[3, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let m = mix_batch_average(&b, &[2, 0, 1], 1, 3).unwrap();
        assert_eq!(m.inputs, b);
        assert_eq!(
            m.soft_targets.data(),
            &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn pairs_first_and_second_half() {
        // [a, b, c, d] -> [(a + c) / 2, (b + d) / 2]
        let b = Tensor::<f64>::from_f64(&[4, 1], &[1.0, 2.0, 5.0, 10.0]).unwrap();
        let m = mix_batch_average(&b, &[0, 1, 1, 0], 2, 2).unwrap();
        assert_eq!(m.inputs.data(), &[3.0, 6.0]);
        assert_eq!(m.soft_targets.data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn four_way_target_counts() {
        let b = Tensor::<f64>::zeros(&[4, 2]);
        let m = mix_batch_average(&b, &[0, 1, 1, 2], 4, 10).unwrap();
        assert_eq!(m.inputs.shape(), &[1, 2]);
        let mut want = [0.0; 10];
        want[0] = 0.25;
        want[1] = 0.5;
        want[2] = 0.25;
        assert_eq!(m.soft_targets.data(), &want);
    }

    #[test]
    fn non_divisor_rejected() {
        let b = Tensor::<f64>::zeros(&[6, 2]);
        assert!(matches!(
            mix_batch_average(&b, &[0; 6], 4, 2),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            mix_batch_weighted(&b, &[0; 6], &[0.5; 4], 2),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn one_hot_coefficients_select_group_zero() {
        let b = Tensor::<f64>::from_f64(&[4, 1], &[1.0, 2.0, 5.0, 10.0]).unwrap();
        let m = mix_batch_weighted(&b, &[1, 0, 0, 1], &[1.0, 0.0], 2).unwrap();
        assert_eq!(m.inputs.data(), &[1.0, 2.0]);
        assert_eq!(m.soft_targets.data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn halves_match_average() {
        let b = Tensor::<f64>::from_f64(&[4, 2], &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]).unwrap();
        let l = [0, 1, 2, 1];
        assert_eq!(
            mix_batch_weighted(&b, &l, &[0.5, 0.5], 3).unwrap(),
            mix_batch_average(&b, &l, 2, 3).unwrap()
        );
    }
}
