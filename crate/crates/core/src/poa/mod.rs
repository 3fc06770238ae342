//! Perfect Ordering Approximation: score candidate learning items, then
//! either consume them in score order or draw them with score weights.

mod scoring;
mod strategy;
mod training;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub use scoring::{make_external_reference, score_max_loss_delta, score_sample_loss, Reference};
pub use strategy::{order_next, sample_batch, select_candidates, DEFAULT_EPSILON};
pub use training::{run_poa_training, PoaOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    Sample,
    Batch,
}

/// A single sample or a mini-batch, addressed by indices into the
/// training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearningItem {
    pub id: usize,
    pub kind: ItemKind,
    pub indices: Vec<usize>,
}

impl LearningItem {
    pub fn new(id: usize, kind: ItemKind, indices: Vec<usize>, dataset_len: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput(format!("learning item {id} has no samples")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= dataset_len) {
            return Err(Error::InvalidInput(format!(
                "learning item {id}: index {bad} out of range for {dataset_len} samples"
            )));
        }
        if kind == ItemKind::Sample && indices.len() != 1 {
            return Err(Error::InvalidInput(format!(
                "single-sample item {id} holds {} indices",
                indices.len()
            )));
        }
        Ok(LearningItem { id, kind, indices })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub item: usize,
    pub score: f64,
    pub scored_at_step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScorerKind {
    SampleLoss,
    MaxLossDeltaSame(DeltaMode),
    MaxLossDeltaExternal {
        reference_size: usize,
        resample_per_epoch: bool,
        mode: DeltaMode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    OrderAscending,
    OrderDescending,
    SampleWeightedDirect,
    SampleWeightedInverse,
}

impl StrategyKind {
    pub fn is_ordering(self) -> bool {
        matches!(self, StrategyKind::OrderAscending | StrategyKind::OrderDescending)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescore {
    PerStep,
    PerEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoaderConfig {
    pub scorer: ScorerKind,
    pub strategy: StrategyKind,
    /// κ: items scored per decision.
    pub candidates: usize,
    pub rescore: Rescore,
    pub item_kind: ItemKind,
    /// Weight smoothing for the sampler strategies.
    pub epsilon: f64,
}

impl Default for LoaderConfig {
    fn default() -> Self {
        LoaderConfig {
            scorer: ScorerKind::SampleLoss,
            strategy: StrategyKind::OrderAscending,
            candidates: 8,
            rescore: Rescore::PerStep,
            item_kind: ItemKind::Batch,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl LoaderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidates == 0 {
            return Err(Error::Config("candidate count κ must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if let ScorerKind::MaxLossDeltaExternal {
            reference_size: 0, ..
        } = self.scorer
        {
            return Err(Error::Config("external reference size must be positive".into()));
        }
        Ok(())
    }
}
