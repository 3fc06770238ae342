use alloc::format;
use alloc::vec::Vec;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, purpose};

/// Seeded split of `0..n` into consecutive batches of `batch_size` after a
/// shuffle. In strict mode `batch_size` must divide `n`; otherwise the last
/// batch may be short.
pub fn split_indices(n: usize, batch_size: usize, seed: u64, strict: bool) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    if strict && !n.is_multiple_of(batch_size) {
        return Err(Error::Config(format!(
            "batch size {batch_size} does not divide {n} samples"
        )));
    }
    let mut g = rng::stream(seed, &[purpose::SPLIT]);
    let order = rng::permutation(n, &mut g);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

pub fn batch_split(dataset: &Dataset, batch_size: usize, seed: u64, strict: bool) -> Result<Vec<Vec<usize>>> {
    split_indices(dataset.len(), batch_size, seed, strict)
}
