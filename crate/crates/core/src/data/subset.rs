use alloc::format;
use alloc::vec::Vec;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, purpose};

/// Exactly `per_class` samples from each requested class (all classes when
/// `classes` is `None`), drawn by a seeded shuffle. The result keeps the
/// source order of the chosen samples.
pub fn subset_per_class(
    dataset: &Dataset,
    per_class: usize,
    classes: Option<&[usize]>,
    seed: u64,
) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::InvalidInput("per_class must be at least 1".into()));
    }
    let all: Vec<usize> = (0..dataset.num_classes()).collect();
    let mut wanted: Vec<usize> = classes.map(<[usize]>::to_vec).unwrap_or(all);
    wanted.sort_unstable();
    wanted.dedup();
    let mut chosen = Vec::with_capacity(per_class * wanted.len());
    for &class in &wanted {
        if class >= dataset.num_classes() {
            return Err(Error::InvalidInput(format!("class {class} does not exist")));
        }
        let members: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.sample(i).label == class)
            .collect();
        if members.len() < per_class {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} samples, {per_class} requested",
                members.len()
            )));
        }
        let mut g = rng::stream(seed, &[purpose::SUBSET, class as u64]);
        let picks = rng::pick_distinct(members.len(), per_class, &mut g);
        chosen.extend(picks.into_iter().map(|p| members[p]));
    }
    chosen.sort_unstable();
    let samples = chosen.iter().map(|&i| dataset.sample(i).clone()).collect();
    dataset.with_samples(
        samples,
        format!(
            "{} | subset per_class={per_class} classes={wanted:?} seed={seed}",
            dataset.provenance()
        ),
    )
}
