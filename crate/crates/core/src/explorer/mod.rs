//! Brute-force ordering search: train every batch permutation of an epoch,
//! keep a KMeans-selected handful of runs, and fan out again.

mod kmeans;

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::data::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::nn::{Checkpoint, ContentHash, ModelSpec};
use crate::real::Real;
use crate::rng::{self, purpose};
use crate::train::{evaluate, Mixing, TrainConfig, Trainer};

pub use kmeans::kmeans_select_by_test_loss;

/// `(n/b)!`, the number of batch orders of one epoch.
pub fn count_orderings(n: usize, b: usize) -> Result<BigUint> {
    if b == 0 || n == 0 || !n.is_multiple_of(b) {
        return Err(Error::InvalidInput(format!(
            "batch size {b} does not divide {n} samples"
        )));
    }
    Ok((1..=n / b).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i)))
}

/// Runs needed for `epochs` epochs: `P + c·P·(E−1)`.
pub fn total_iterations(perms: &BigUint, clusters: usize, epochs: u64) -> Result<BigUint> {
    if epochs == 0 {
        return Err(Error::InvalidInput("exploration needs at least one epoch".into()));
    }
    Ok(perms + perms * BigUint::from(clusters) * BigUint::from(epochs - 1))
}

/// The `rank`-th permutation of `0..len` in lexicographic order.
pub fn nth_permutation(len: usize, mut rank: u128) -> Vec<usize> {
    let mut rest: Vec<usize> = (0..len).collect();
    let mut out = Vec::with_capacity(len);
    for i in (0..len).rev() {
        let block: u128 = (1..=i as u128).product();
        let pick = (rank / block) as usize;
        rank %= block;
        out.push(rest.remove(pick));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationRun {
    pub epoch: u64,
    /// Position of the parent among the previous epoch's representatives.
    pub parent_index: usize,
    pub parent_hash: ContentHash,
    pub rank: u128,
    pub permutation: Vec<usize>,
    pub test_loss: f64,
    pub test_acc: f64,
    pub checkpoint_hash: ContentHash,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDistribution {
    pub epoch: u64,
    pub min_accuracy: f64,
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
    pub min_loss: f64,
    pub max_loss: f64,
    pub runs: usize,
}

impl EpochDistribution {
    pub fn from_runs(epoch: u64, runs: &[PermutationRun]) -> Self {
        let fold = |f: fn(f64, f64) -> f64, init: f64, get: fn(&PermutationRun) -> f64| {
            runs.iter().map(get).fold(init, f)
        };
        let min_accuracy = fold(f64::min, f64::INFINITY, |r| r.test_acc);
        let max_accuracy = fold(f64::max, f64::NEG_INFINITY, |r| r.test_acc);
        // Summation rounding can push the mean of equal values past them.
        let mean = runs.iter().map(|r| r.test_acc).sum::<f64>() / runs.len() as f64;
        EpochDistribution {
            epoch,
            min_accuracy,
            mean_accuracy: mean.clamp(min_accuracy, max_accuracy),
            max_accuracy,
            min_loss: fold(f64::min, f64::INFINITY, |r| r.test_loss),
            max_loss: fold(f64::max, f64::NEG_INFINITY, |r| r.test_loss),
            runs: runs.len(),
        }
    }
}

/// Trains one epoch from `parent`, visiting `batches` in `permutation`
/// order, and returns the resulting test metrics and checkpoint.
#[allow(clippy::too_many_arguments)]
pub fn run_epoch_permutation<S: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    parent: &Checkpoint<S>,
    epoch: u64,
    permutation: &[usize],
    batches: &[Vec<usize>],
    train: &Dataset,
    test: &Dataset,
) -> Result<(f64, f64, Checkpoint<S>)> {
    let mut trainer = Trainer::from_checkpoint(spec, parent)?;
    trainer.epoch = epoch;
    for &b in permutation {
        let batch = batches.get(b).ok_or_else(|| {
            Error::InvalidInput(format!("permutation names batch {b} of {}", batches.len()))
        })?;
        trainer.train_on(train, batch, &Mixing::None, &cfg.preprocess)?;
    }
    let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
    Ok((eval.loss, eval.accuracy, trainer.snapshot()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreConfig {
    pub clusters: usize,
    /// Largest total run count that may be started.
    pub budget: u128,
}

#[derive(Debug, Clone)]
pub struct Exploration<S> {
    pub initial_hash: ContentHash,
    /// Sorted by (epoch, parent index, permutation rank).
    pub ledger: Vec<PermutationRun>,
    pub distributions: Vec<EpochDistribution>,
    /// Representative checkpoints kept after the final epoch.
    pub representatives: Vec<Checkpoint<S>>,
}

/// Epoch 1 enumerates every batch order from one shared initialization;
/// each later epoch draws a fresh split and enumerates every order again
/// from each representative of the previous epoch.
pub fn explore<S: Real, E: Executor>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    ex: &ExploreConfig,
    train: &Dataset,
    test: &Dataset,
    exec: &E,
) -> Result<Exploration<S>> {
    if ex.clusters == 0 {
        return Err(Error::Config("explorer needs at least one cluster".into()));
    }
    let perms = count_orderings(train.len(), cfg.batch_size)?;
    let required = total_iterations(&perms, ex.clusters, cfg.epochs)?;
    if required > BigUint::from(ex.budget) {
        return Err(Error::Budget {
            required: u128::try_from(&required).unwrap_or(u128::MAX),
            budget: ex.budget,
        });
    }
    let perms = u128::try_from(&perms).expect("bounded by the budget");
    let batch_count = train.len() / cfg.batch_size;

    let initial = Trainer::<S>::new(spec, cfg)?.snapshot();
    let initial_hash = initial.content_hash();
    let mut parents = alloc::vec![(initial_hash, initial)];
    let mut ledger = Vec::new();
    let mut distributions = Vec::new();
    for epoch in 1..=cfg.epochs {
        let batches = split_indices(train.len(), cfg.batch_size, cfg.split_seed(epoch), true)?;
        let units = parents.len() * perms as usize;
        let results = exec.map(units, |u| {
            let (parent_index, rank) = (u / perms as usize, (u % perms as usize) as u128);
            let (parent_hash, parent) = &parents[parent_index];
            let permutation = nth_permutation(batch_count, rank);
            let (test_loss, test_acc, ck) =
                run_epoch_permutation(spec, cfg, parent, epoch, &permutation, &batches, train, test)?;
            let run = PermutationRun {
                epoch,
                parent_index,
                parent_hash: *parent_hash,
                rank,
                permutation,
                test_loss,
                test_acc,
                checkpoint_hash: ck.content_hash(),
            };
            Ok::<_, Error>((run, ck))
        });
        let mut runs = Vec::with_capacity(units);
        let mut checkpoints = Vec::with_capacity(units);
        for r in results {
            let (run, ck) = r?;
            runs.push(run);
            checkpoints.push(ck);
        }
        distributions.push(EpochDistribution::from_runs(epoch, &runs));
        let losses: Vec<f64> = runs.iter().map(|r| r.test_loss).collect();
        let seed = rng::derive_seed(cfg.seed, &[purpose::KMEANS, epoch]);
        let keep = kmeans_select_by_test_loss(&losses, ex.clusters, seed);
        let mut checkpoints: Vec<Option<Checkpoint<S>>> = checkpoints.into_iter().map(Some).collect();
        parents = keep
            .iter()
            .map(|&i| {
                (
                    runs[i].checkpoint_hash,
                    checkpoints[i].take().expect("distinct ids"),
                )
            })
            .collect();
        ledger.extend(runs);
    }
    Ok(Exploration {
        initial_hash,
        ledger,
        distributions,
        representatives: parents.into_iter().map(|(_, ck)| ck).collect(),
    })
}
