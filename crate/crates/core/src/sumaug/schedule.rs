use alloc::format;
use alloc::vec::Vec;

use super::{gcc, sample_coefficients, CoefficientSource};
use crate::data::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{Clock, MetricsRecord};
use crate::nn::ModelSpec;
use crate::real::Real;
use crate::rng::{self, purpose, Rng};
use crate::train::{
    epoch_record, evaluate, take_random, EpochTally, EvalStats, Mixing, TrainConfig, Trainer,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    pub start_k: usize,
    /// Gradient steps without a test-loss improvement that end a stage.
    pub patience_steps: u64,
    /// Smallest test-loss decrease that counts as an improvement.
    pub min_delta: f64,
    /// Last group count trained; 1 runs the cascade down to clean data.
    pub stop_at_k: usize,
    /// Upper bound on epochs per stage.
    pub max_stage_epochs: u64,
    pub coefficients: CoefficientSource,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            start_k: 4,
            patience_steps: 300,
            min_delta: 1e-4,
            stop_at_k: 1,
            max_stage_epochs: 100,
            coefficients: CoefficientSource::Average,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self, batch_size: usize) -> Result<()> {
        if !self.start_k.is_power_of_two() || !batch_size.is_multiple_of(self.start_k) {
            return Err(Error::Config(format!(
                "start K {} must be a power of two dividing the batch size {batch_size}",
                self.start_k
            )));
        }
        if self.stop_at_k == 0 || self.stop_at_k > self.start_k {
            return Err(Error::Config(format!(
                "stop K {} must be in 1..={}",
                self.stop_at_k, self.start_k
            )));
        }
        if self.max_stage_epochs == 0 {
            return Err(Error::Config("stages need at least one epoch".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradualConfig {
    /// Initial group count.
    pub n: usize,
    pub nr_epochs: u64,
    pub nr_finetune_epochs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub k: usize,
    pub epochs: u64,
    pub best_test_acc: f64,
    /// Test accuracy re-measured right after the best checkpoint was reloaded.
    pub reloaded_test_acc: f64,
    pub end_step: u64,
}

#[derive(Debug, Clone)]
pub struct CascadeOutcome<S> {
    pub trainer: Trainer<S>,
    pub records: Vec<MetricsRecord>,
    pub stages: Vec<StageSummary>,
}

/// Runs one epoch over a fresh split. Batches whose size is not a multiple
/// of the group count (a short final batch) are skipped.
#[allow(clippy::too_many_arguments)]
fn run_epoch<S: Real>(
    trainer: &mut Trainer<S>,
    cfg: &TrainConfig,
    train: &Dataset,
    groups: usize,
    order: &mut Rng,
    mut mixing_for: impl FnMut() -> Result<Mixing>,
) -> Result<EpochTally> {
    trainer.epoch += 1;
    let batches = split_indices(train.len(), cfg.batch_size, cfg.split_seed(trainer.epoch), false)?;
    let mut pool: Vec<usize> = (0..batches.len()).collect();
    let mut tally = EpochTally::default();
    while !pool.is_empty() {
        let id = take_random(&mut pool, order);
        if batches[id].len() % groups != 0 {
            continue;
        }
        let mixing = mixing_for()?;
        tally.add(&trainer.train_on(train, &batches[id], &mixing, &cfg.preprocess)?);
    }
    Ok(tally)
}

fn event_row<S: Real>(
    cfg: &TrainConfig,
    trainer: &Trainer<S>,
    eval: &EvalStats,
    k: usize,
    t: f64,
    clock: &dyn Clock,
    event: alloc::string::String,
) -> MetricsRecord {
    let mut row = epoch_record(cfg, trainer, &EpochTally::default(), eval, k, t, clock);
    row.event = event;
    row
}

/// Trains with `K` sum groups until the test loss stops improving, reloads
/// the best-accuracy checkpoint of the stage, halves `K`, and repeats until
/// the `stop_at_k` stage has plateaued.
pub fn run_cascade<S: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    cascade: &CascadeConfig,
    train: &Dataset,
    test: &Dataset,
    clock: &dyn Clock,
) -> Result<CascadeOutcome<S>> {
    cascade.validate(cfg.batch_size)?;
    let mut trainer = Trainer::<S>::new(spec, cfg)?;
    let mut order = rng::stream(cfg.seed, &[purpose::ORDER]);
    let mut coef_rng = rng::stream(cfg.seed, &[purpose::COEFFICIENTS]);
    let mut records = Vec::new();
    let mut stages = Vec::new();
    let mut k = cascade.start_k;
    loop {
        let mut best: Option<(f64, crate::nn::Checkpoint<S>)> = None;
        let mut best_loss = f64::INFINITY;
        let mut last_improvement = trainer.step;
        let mut epochs = 0;
        while epochs < cascade.max_stage_epochs {
            let tally = run_epoch(&mut trainer, cfg, train, k, &mut order, || {
                Ok(match cascade.coefficients {
                    CoefficientSource::Average => Mixing::Average(k),
                    source => Mixing::Weighted {
                        coefficients: sample_coefficients(k, source, &mut coef_rng)?,
                        divisor: k as f64,
                    },
                })
            })?;
            epochs += 1;
            let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
            records.push(epoch_record(cfg, &trainer, &tally, &eval, k, 0.0, clock));
            if best.as_ref().is_none_or(|(acc, _)| eval.accuracy > *acc) {
                best = Some((eval.accuracy, trainer.snapshot()));
            }
            if eval.loss < best_loss - cascade.min_delta {
                best_loss = eval.loss;
                last_improvement = trainer.step;
            } else if trainer.step - last_improvement >= cascade.patience_steps {
                break;
            }
        }
        let (best_acc, ck) = best.expect("a stage trains at least one epoch");
        let (step, epoch) = (trainer.step, trainer.epoch);
        trainer.restore(&ck)?;
        trainer.step = step;
        trainer.epoch = epoch;
        let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
        let next = if k > cascade.stop_at_k { k / 2 } else { 0 };
        let event = if next > 0 {
            format!("stage K={k}->{next}: reloaded best checkpoint (test_acc={best_acc})")
        } else {
            format!("stage K={k} done: reloaded best checkpoint (test_acc={best_acc})")
        };
        records.push(event_row(cfg, &trainer, &eval, k, 0.0, clock, event));
        stages.push(StageSummary {
            k,
            epochs,
            best_test_acc: best_acc,
            reloaded_test_acc: eval.accuracy,
            end_step: step,
        });
        if next == 0 {
            break;
        }
        k = next;
    }
    Ok(CascadeOutcome {
        trainer,
        records,
        stages,
    })
}

/// Epoch `e` (from 0) mixes `n` groups with `gcc(n, min(e / nr_epochs, 1))`;
/// afterwards `nr_finetune_epochs` epochs train on clean batches at `t = 1`.
pub fn run_gradual_cascade<S: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    gradual: &GradualConfig,
    train: &Dataset,
    test: &Dataset,
    clock: &dyn Clock,
) -> Result<(Trainer<S>, Vec<MetricsRecord>)> {
    if gradual.nr_epochs == 0 {
        return Err(Error::Config("gradual schedule needs nr_epochs ≥ 1".into()));
    }
    if gradual.n == 0 || !cfg.batch_size.is_multiple_of(gradual.n) {
        return Err(Error::Config(format!(
            "n = {} must divide the batch size {}",
            gradual.n, cfg.batch_size
        )));
    }
    let mut trainer = Trainer::<S>::new(spec, cfg)?;
    let mut order = rng::stream(cfg.seed, &[purpose::ORDER]);
    let mut records = Vec::new();
    let t_step = 1.0 / gradual.nr_epochs as f64;
    for e in 0..gradual.nr_epochs {
        let t = (e as f64 * t_step).min(1.0);
        let c = gcc(gradual.n, t)?;
        let mixing = Mixing::Weighted {
            coefficients: c.coefficients.clone(),
            divisor: c.effective_groups(),
        };
        let tally = run_epoch(&mut trainer, cfg, train, gradual.n, &mut order, || {
            Ok(mixing.clone())
        })?;
        let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
        records.push(epoch_record(cfg, &trainer, &tally, &eval, c.active(), t, clock));
    }
    for _ in 0..gradual.nr_finetune_epochs {
        let tally = run_epoch(&mut trainer, cfg, train, 1, &mut order, || Ok(Mixing::Average(1)))?;
        let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
        records.push(epoch_record(cfg, &trainer, &tally, &eval, 1, 1.0, clock));
    }
    Ok((trainer, records))
}

/// Positions `i` (1-based into `series`) where `|series[i] − series[i−1]|`
/// exceeds `factor` times the median absolute change.
pub fn spike_flags(series: &[f64], factor: f64) -> Vec<usize> {
    if series.len() < 3 {
        return Vec::new();
    }
    let deltas: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut sorted = deltas.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    deltas
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > factor * median)
        .map(|(i, _)| i + 1)
        .collect()
}
