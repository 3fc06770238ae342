use alloc::format;
use alloc::vec::Vec;

use super::{DeltaMode, LearningItem};
use crate::data::{Dataset, PreprocessConfig};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{self, purpose};
use crate::train::{batch_loss, eval_inputs, Target, Trainer};

/// Loss of the item under the current parameters.
pub fn score_sample_loss<S: Real>(
    trainer: &Trainer<S>,
    data: &Dataset,
    item: &LearningItem,
    pre: &PreprocessConfig,
) -> Result<f64> {
    batch_loss(&trainer.net, data, &item.indices, pre)
}

/// Batch whose loss change measures an item's usefulness.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    SameItem,
    External { data: &'a Dataset, indices: &'a [usize] },
}

/// Takes a trial gradient step with the item, measures how much the
/// reference loss dropped, and puts parameters and velocities back.
pub fn score_max_loss_delta<S: Real>(
    trainer: &mut Trainer<S>,
    data: &Dataset,
    item: &LearningItem,
    reference: Reference<'_>,
    mode: DeltaMode,
    pre: &PreprocessConfig,
) -> Result<f64> {
    let reference_loss = |t: &Trainer<S>| match reference {
        Reference::SameItem => batch_loss(&t.net, data, &item.indices, pre),
        Reference::External { data, indices } => batch_loss(&t.net, data, indices, pre),
    };
    let prev = reference_loss(trainer)?;
    let saved_params = trainer.net.params().to_vec();
    let saved_velocity = trainer.opt.velocity.clone();
    let inputs = eval_inputs::<S>(data, &item.indices, pre)?;
    let labels = data.labels(&item.indices);
    let trial = trainer
        .apply_gradient(&inputs, Target::Labels(&labels))
        .and_then(|_| reference_loss(trainer));
    trainer.net.set_params(saved_params)?;
    trainer.net.clear_tape();
    trainer.opt.velocity = saved_velocity;
    let new = trial?;
    let delta = prev - new;
    let score = match mode {
        DeltaMode::Absolute => delta,
        DeltaMode::Relative => {
            if prev == 0.0 {
                return Err(Error::DegenerateScore(format!(
                    "relative loss delta of item {} with zero reference loss",
                    item.id
                )));
            }
            delta / prev
        }
    };
    if !score.is_finite() {
        return Err(Error::DegenerateScore(format!("item {} scored {score}", item.id)));
    }
    Ok(score)
}

/// Seeded uniform draw of `size` distinct test indices. Pass the epoch
/// to refresh the reference each epoch, or a constant to keep it fixed.
pub fn make_external_reference(test_len: usize, size: usize, seed: u64, epoch: u64) -> Result<Vec<usize>> {
    if size == 0 || size > test_len {
        return Err(Error::InvalidInput(format!(
            "reference of {size} samples requested from a set of {test_len}"
        )));
    }
    let mut g = rng::stream(seed, &[purpose::REFERENCE, epoch]);
    Ok(rng::pick_distinct(test_len, size, &mut g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::synthetic_blobs;
    use crate::nn::{Activation, ModelSpec};
    use crate::poa::ItemKind;
    use crate::train::TrainConfig;
    use rand::{Rng as _, SeedableRng};

    fn setup() -> (Trainer<f64>, Dataset) {
        let data = synthetic_blobs(3, 12, 4, 2.0, 7).unwrap();
        let spec = ModelSpec::mlp(4, &[6], 3, Activation::Tanh);
        let trainer = Trainer::new(&spec, &TrainConfig::default()).unwrap();
        (trainer, data)
    }

    fn item(id: usize, indices: &[usize]) -> LearningItem {
        LearningItem::new(id, ItemKind::Batch, indices.to_vec(), 36).unwrap()
    }

    #[test]
    fn sample_loss_matches_direct_evaluation() {
        let (t, data) = setup();
        let pre = PreprocessConfig::default();
        let it = item(0, &[1, 5, 9]);
        let s = score_sample_loss(&t, &data, &it, &pre).unwrap();
        let logits = t
            .net
            .forward(&eval_inputs::<f64>(&data, &it.indices, &pre).unwrap())
            .unwrap();
        let direct = crate::nn::softmax_cross_entropy(&logits, &data.labels(&it.indices)).unwrap();
        assert_eq!(s.to_bits(), direct.loss.to_bits());
        assert_eq!(s, score_sample_loss(&t, &data, &it, &pre).unwrap());
    }

    #[test]
    fn uniform_logits_score_ln_classes() {
        let data = synthetic_blobs(10, 2, 3, 1.0, 1).unwrap();
        let spec = ModelSpec::mlp(3, &[], 10, Activation::Relu);
        let mut t = Trainer::<f64>::new(&spec, &TrainConfig::default()).unwrap();
        let zeros: Vec<_> = t
            .net
            .params()
            .iter()
            .map(|p| crate::Tensor::zeros(p.shape()))
            .collect();
        t.net.set_params(zeros).unwrap();
        let it = LearningItem::new(0, ItemKind::Sample, alloc::vec![3], 20).unwrap();
        let s = score_sample_loss(&t, &data, &it, &PreprocessConfig::default()).unwrap();
        assert!((s - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn max_loss_delta_rolls_back_bitwise() {
        let (mut t, data) = setup();
        let pre = PreprocessConfig::default();
        let external: Vec<usize> = (20..36).collect();
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // Move off the initialization so velocities are nonzero.
        t.train_on(&data, &[0, 1, 2, 3], &crate::train::Mixing::None, &pre)
            .unwrap();
        let before = t.state_hash();
        for trial in 0..20 {
            let a = g.random_range(0..30);
            let it = item(trial, &[a, a + 3, a + 6]);
            let reference = if trial % 2 == 0 {
                Reference::SameItem
            } else {
                Reference::External {
                    data: &data,
                    indices: &external,
                }
            };
            let mode = if trial % 4 < 2 {
                DeltaMode::Absolute
            } else {
                DeltaMode::Relative
            };
            let first = score_max_loss_delta(&mut t, &data, &it, reference, mode, &pre).unwrap();
            let again = score_max_loss_delta(&mut t, &data, &it, reference, mode, &pre).unwrap();
            assert_eq!(first.to_bits(), again.to_bits());
            assert_eq!(t.state_hash(), before);
        }
    }

    #[test]
    fn external_reference_draws() {
        let r = make_external_reference(10000, 512, 3, 1).unwrap();
        let mut sorted = r.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 512);
        assert_eq!(r, make_external_reference(10000, 512, 3, 1).unwrap());
        assert_ne!(r, make_external_reference(10000, 512, 3, 2).unwrap());
        let mut full = make_external_reference(7, 7, 0, 0).unwrap();
        full.sort_unstable();
        assert_eq!(full, [0, 1, 2, 3, 4, 5, 6]);
        assert!(make_external_reference(7, 8, 0, 0).is_err());
    }
}
