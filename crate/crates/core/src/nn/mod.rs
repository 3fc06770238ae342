//! Small networks with hand-written reverse passes, SGD and checkpoints.

mod checkpoint;
mod loss;
mod network;
mod optim;
mod spec;

pub use checkpoint::{hex, sha256, Checkpoint, ContentHash, HASH_LEN, MAGIC};
pub use loss::{
    mixed_bce_loss, per_sample_cross_entropy, soft_bce_loss, softmax, softmax_cross_entropy, LossOutput,
};
pub use network::{Gradients, Network};
pub use optim::{sgd_step, LrSchedule, OptimizerState};
pub use spec::{Activation, Architecture, ConvBlock, ModelSpec};

use crate::real::Real;
use crate::tensor::Tensor;

/// Euclidean norm over all parameter entries, accumulated in f64.
pub fn l2_norm<S: Real>(params: &[Tensor<S>]) -> f64 {
    let sum: f64 = params
        .iter()
        .flat_map(|t| t.data().iter())
        .map(|&v| {
            let v = v.as_f64();
            v * v
        })
        .sum();
    num_traits::Float::sqrt(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let p = [Tensor::<f64>::from_f64(&[2], &[3.0, 4.0]).unwrap()];
        assert_eq!(l2_norm(&p), 5.0);
        assert_eq!(l2_norm(&[Tensor::<f32>::zeros(&[7])]), 0.0);
    }
}
