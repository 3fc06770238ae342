use alloc::format;
use alloc::vec::Vec;

use super::{
    make_external_reference, order_next, sample_batch, score_max_loss_delta, score_sample_loss,
    select_candidates, ItemKind, LearningItem, LoaderConfig, Reference, Rescore, ScoreRecord, ScorerKind,
};
use crate::data::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::metrics::{Clock, MetricsRecord};
use crate::nn::ModelSpec;
use crate::real::Real;
use crate::rng::{self, purpose};
use crate::train::{epoch_record, evaluate, EpochTally, LrController, Mixing, TrainConfig, Trainer};

#[derive(Debug, Clone)]
pub struct PoaOutcome<S> {
    pub trainer: Trainer<S>,
    pub records: Vec<MetricsRecord>,
    /// Step at which the training loss became non-finite, if it did.
    pub diverged_at: Option<u64>,
}

fn epoch_items(cfg: &TrainConfig, kind: ItemKind, train: &Dataset, epoch: u64) -> Result<Vec<LearningItem>> {
    match kind {
        ItemKind::Batch => split_indices(train.len(), cfg.batch_size, cfg.split_seed(epoch), false)?
            .into_iter()
            .enumerate()
            .map(|(id, b)| LearningItem::new(id, kind, b, train.len()))
            .collect(),
        ItemKind::Sample => (0..train.len())
            .map(|i| LearningItem::new(i, kind, alloc::vec![i], train.len()))
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn score_items<S: Real, E: Executor>(
    trainer: &Trainer<S>,
    loader: &LoaderConfig,
    cfg: &TrainConfig,
    train: &Dataset,
    test: &Dataset,
    reference: &[usize],
    items: &[LearningItem],
    ids: &[usize],
    exec: &E,
) -> Result<Vec<ScoreRecord>> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let scores = exec.map(sorted.len(), |i| {
        let item = &items[sorted[i]];
        match loader.scorer {
            ScorerKind::SampleLoss => score_sample_loss(trainer, train, item, &cfg.preprocess),
            ScorerKind::MaxLossDeltaSame(mode) => {
                let mut clone = trainer.clone();
                score_max_loss_delta(
                    &mut clone,
                    train,
                    item,
                    Reference::SameItem,
                    mode,
                    &cfg.preprocess,
                )
            }
            ScorerKind::MaxLossDeltaExternal { mode, .. } => {
                let mut clone = trainer.clone();
                let r = Reference::External {
                    data: test,
                    indices: reference,
                };
                score_max_loss_delta(&mut clone, train, item, r, mode, &cfg.preprocess)
            }
        }
    });
    sorted
        .iter()
        .zip(scores)
        .map(|(&item, s)| {
            Ok(ScoreRecord {
                item,
                score: s?,
                scored_at_step: trainer.step,
            })
        })
        .collect()
}

/// Trains with the POA data loader. Each decision scores κ candidate
/// items; ordering strategies consume every item of the epoch exactly once,
/// sampling strategies draw with replacement for as many steps as the epoch
/// has items. With κ = 1 and an ordering strategy the run matches
/// [`crate::train::run_plain`] step for step.
pub fn run_poa_training<S: Real, E: Executor>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    loader: &LoaderConfig,
    train: &Dataset,
    test: &Dataset,
    exec: &E,
    clock: &dyn Clock,
) -> Result<PoaOutcome<S>> {
    loader.validate()?;
    let mut trainer = Trainer::<S>::new(spec, cfg)?;
    let mut order = rng::stream(cfg.seed, &[purpose::ORDER]);
    let mut draws = rng::stream(cfg.seed, &[purpose::CANDIDATES]);
    let mut lr = LrController::new(cfg.schedule);
    let mut records = Vec::new();
    let per_step = match loader.item_kind {
        ItemKind::Batch => 1,
        ItemKind::Sample => cfg.batch_size,
    };
    for epoch in 1..=cfg.epochs {
        trainer.epoch = epoch;
        let items = epoch_items(cfg, loader.item_kind, train, epoch)?;
        let reference = match loader.scorer {
            ScorerKind::MaxLossDeltaExternal {
                reference_size,
                resample_per_epoch,
                ..
            } => {
                let tag = if resample_per_epoch { epoch } else { 0 };
                make_external_reference(test.len(), reference_size, cfg.seed, tag)?
            }
            _ => Vec::new(),
        };
        let all: Vec<usize> = (0..items.len()).collect();
        let cached = match loader.rescore {
            Rescore::PerEpoch => Some(score_items(
                &trainer, loader, cfg, train, test, &reference, &items, &all, exec,
            )?),
            Rescore::PerStep => None,
        };
        let score = |trainer: &Trainer<S>, ids: &[usize]| -> Result<Vec<ScoreRecord>> {
            match &cached {
                Some(c) => {
                    let mut picked: Vec<ScoreRecord> = ids.iter().map(|&i| c[i]).collect();
                    picked.sort_by_key(|r| r.item);
                    Ok(picked)
                }
                None => score_items(trainer, loader, cfg, train, test, &reference, &items, ids, exec),
            }
        };
        let mut pool = all.clone();
        let steps = if loader.strategy.is_ordering() {
            usize::MAX
        } else {
            items.len().div_ceil(per_step)
        };
        let mut tally = EpochTally::default();
        let mut taken = 0;
        while taken < steps && !pool.is_empty() {
            taken += 1;
            let count = loader.candidates.min(pool.len());
            let candidates = select_candidates(&pool, count, &mut order)?;
            let mut scores = score(&trainer, &candidates)?;
            let picks = if loader.strategy.is_ordering() {
                let mut picks = Vec::new();
                while picks.len() < per_step && !scores.is_empty() {
                    let id = order_next(&scores, loader.strategy)?;
                    scores.retain(|r| r.item != id);
                    pool.retain(|&p| p != id);
                    picks.push(id);
                }
                picks
            } else {
                sample_batch(&scores, loader.strategy, loader.epsilon, &mut draws, per_step)?
            };
            let indices: Vec<usize> = picks
                .iter()
                .flat_map(|&id| items[id].indices.iter().copied())
                .collect();
            match trainer.train_on(train, &indices, &Mixing::None, &cfg.preprocess) {
                Ok(stats) => tally.add(&stats),
                Err(Error::Diverged { step }) => {
                    trainer.step = step;
                    let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
                    let mut row = epoch_record(cfg, &trainer, &tally, &eval, 1, 0.0, clock);
                    row.event = format!("diverged: non-finite training loss at step {step}");
                    records.push(row);
                    return Ok(PoaOutcome {
                        trainer,
                        records,
                        diverged_at: Some(step),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
        records.push(epoch_record(cfg, &trainer, &tally, &eval, 1, 0.0, clock));
        lr.after_epoch(epoch, trainer.step, eval.loss, &mut trainer.opt);
    }
    Ok(PoaOutcome {
        trainer,
        records,
        diverged_at: None,
    })
}
