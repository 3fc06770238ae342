//! Training state, single gradient steps, evaluation and the plain
//! random-order training loop every other schedule is compared against.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{preprocess, split_indices, Dataset, PreprocessConfig};
use crate::error::{Error, Result};
use crate::metrics::{Clock, MetricsRecord};
use crate::nn::{
    l2_norm, per_sample_cross_entropy, sgd_step, sha256, soft_bce_loss, softmax_cross_entropy, Checkpoint,
    ContentHash, LrSchedule, ModelSpec, Network, OptimizerState,
};
use crate::real::Real;
use crate::rng::{self, purpose, Rng};
use crate::sumaug::{mix_batch_average, mix_batch_weighted};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub run_id: String,
    pub seed: u64,
    pub epochs: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub nesterov: bool,
    pub schedule: LrSchedule,
    pub preprocess: PreprocessConfig,
    pub eval_batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            run_id: "run".into(),
            seed: 0,
            epochs: 1,
            batch_size: 100,
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 1e-4,
            nesterov: true,
            schedule: LrSchedule::Constant,
            preprocess: PreprocessConfig::default(),
            eval_batch_size: 256,
        }
    }
}

impl TrainConfig {
    /// Seed of the batch split used in `epoch`.
    pub fn split_seed(&self, epoch: u64) -> u64 {
        rng::derive_seed(self.seed, &[purpose::SPLIT, epoch])
    }
}

/// How a training batch is turned into network inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Mixing {
    /// Raw samples, softmax cross-entropy.
    None,
    /// Sum groups of `K` averaged samples, BCE divided by `K`.
    Average(usize),
    /// Coefficient-weighted sum groups, BCE divided by `divisor`.
    Weighted { coefficients: Vec<f64>, divisor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub loss: f64,
    pub accuracy: f64,
    pub correct: usize,
    pub count: usize,
}

/// Network, optimizer and augmentation generator of one training run.
#[derive(Debug, Clone)]
pub struct Trainer<S> {
    pub net: Network<S>,
    pub opt: OptimizerState<S>,
    pub rng: Rng,
    pub step: u64,
    pub epoch: u64,
}

impl<S: Real> Trainer<S> {
    pub fn new(spec: &ModelSpec, cfg: &TrainConfig) -> Result<Self> {
        let net = Network::init(spec, &mut rng::stream(cfg.seed, &[purpose::INIT]))?;
        let opt = OptimizerState::new(
            net.params(),
            cfg.learning_rate,
            cfg.momentum,
            cfg.weight_decay,
            cfg.nesterov,
        )?;
        Ok(Trainer {
            net,
            opt,
            rng: rng::stream(cfg.seed, &[purpose::AUGMENT]),
            step: 0,
            epoch: 0,
        })
    }

    pub fn from_checkpoint(spec: &ModelSpec, ck: &Checkpoint<S>) -> Result<Self> {
        let mut net = Network::zeros(spec)?;
        let (opt, rng) = ck.restore_into(&mut net)?;
        Ok(Trainer {
            net,
            opt,
            rng,
            step: ck.step,
            epoch: ck.epoch,
        })
    }

    pub fn snapshot(&self) -> Checkpoint<S> {
        Checkpoint::snapshot(&self.net, &self.opt, &self.rng, self.step, self.epoch)
    }

    pub fn restore(&mut self, ck: &Checkpoint<S>) -> Result<()> {
        let (opt, rng) = ck.restore_into(&mut self.net)?;
        self.opt = opt;
        self.rng = rng;
        self.step = ck.step;
        self.epoch = ck.epoch;
        Ok(())
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(self.net.params())
    }

    /// SHA-256 over parameter and velocity bytes.
    pub fn state_hash(&self) -> ContentHash {
        let mut bytes = Vec::new();
        for t in self.net.params().iter().chain(&self.opt.velocity) {
            for &v in t.data() {
                v.write_le(&mut bytes);
            }
        }
        sha256(&bytes)
    }

    /// Forward, loss, backward and one SGD update on ready-made inputs.
    /// Does not advance the step counter.
    pub fn apply_gradient(&mut self, inputs: &Tensor<S>, target: Target<'_, S>) -> Result<StepStats> {
        let logits = self.net.forward_train(inputs)?;
        let (loss, correct) = match target {
            Target::Labels(labels) => {
                let out = softmax_cross_entropy(&logits, labels)?;
                let correct = (0..labels.len())
                    .filter(|&i| logits.argmax_row(i) == labels[i])
                    .count();
                (out, correct)
            }
            Target::Soft { targets, divisor } => {
                let out = soft_bce_loss(&logits, targets, divisor)?;
                let correct = (0..targets.rows())
                    .filter(|&i| logits.argmax_row(i) == targets.argmax_row(i))
                    .count();
                (out, correct)
            }
        };
        let grads = self.net.backward(&loss.grad)?;
        sgd_step(self.net.params_mut(), &grads.params, &mut self.opt)?;
        let value = loss.loss.as_f64();
        if !value.is_finite() {
            return Err(Error::Diverged { step: self.step + 1 });
        }
        Ok(StepStats {
            loss: value,
            correct,
            count: inputs.rows(),
        })
    }

    /// One training step on the given samples: augmentation, optional
    /// mixing, update, step counter.
    pub fn train_on(
        &mut self,
        data: &Dataset,
        indices: &[usize],
        mixing: &Mixing,
        pre: &PreprocessConfig,
    ) -> Result<StepStats> {
        let raw = data.gather::<S>(indices)?;
        let batch = preprocess(&raw, pre, &mut self.rng, true)?;
        let labels = data.labels(indices);
        let stats = match mixing {
            Mixing::None => self.apply_gradient(&batch, Target::Labels(&labels))?,
            Mixing::Average(k) => {
                let mixed = mix_batch_average(&batch, &labels, *k, data.num_classes())?;
                self.apply_gradient(
                    &mixed.inputs,
                    Target::Soft {
                        targets: &mixed.soft_targets,
                        divisor: *k as f64,
                    },
                )?
            }
            Mixing::Weighted {
                coefficients,
                divisor,
            } => {
                let mixed = mix_batch_weighted(&batch, &labels, coefficients, data.num_classes())?;
                self.apply_gradient(
                    &mixed.inputs,
                    Target::Soft {
                        targets: &mixed.soft_targets,
                        divisor: *divisor,
                    },
                )?
            }
        };
        self.step += 1;
        Ok(stats)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Target<'a, S> {
    Labels(&'a [usize]),
    Soft { targets: &'a Tensor<S>, divisor: f64 },
}

/// Eval-mode inputs (normalization only) for the given samples.
pub fn eval_inputs<S: Real>(data: &Dataset, indices: &[usize], pre: &PreprocessConfig) -> Result<Tensor<S>> {
    let raw = data.gather::<S>(indices)?;
    // No augmentation happens in eval mode, so the generator is never drawn.
    let mut unused = rng::stream(0, &[]);
    preprocess(&raw, pre, &mut unused, false)
}

/// Mean cross-entropy of `indices` under the current parameters.
pub fn batch_loss<S: Real>(
    net: &Network<S>,
    data: &Dataset,
    indices: &[usize],
    pre: &PreprocessConfig,
) -> Result<f64> {
    let inputs = eval_inputs::<S>(data, indices, pre)?;
    let logits = net.forward(&inputs)?;
    let out = softmax_cross_entropy(&logits, &data.labels(indices))?;
    Ok(out.loss.as_f64())
}

/// Test loss and accuracy over a whole dataset, in sample order.
pub fn evaluate<S: Real>(
    net: &Network<S>,
    data: &Dataset,
    pre: &PreprocessConfig,
    batch_size: usize,
) -> Result<EvalStats> {
    let all: Vec<usize> = (0..data.len()).collect();
    evaluate_indices(net, data, &all, pre, batch_size)
}

pub fn evaluate_indices<S: Real>(
    net: &Network<S>,
    data: &Dataset,
    indices: &[usize],
    pre: &PreprocessConfig,
    batch_size: usize,
) -> Result<EvalStats> {
    let mut total = 0.0;
    let mut correct = 0;
    for chunk in indices.chunks(batch_size.max(1)) {
        let inputs = eval_inputs::<S>(data, chunk, pre)?;
        let logits = net.forward(&inputs)?;
        let labels = data.labels(chunk);
        for (i, l) in per_sample_cross_entropy(&logits, &labels)?
            .into_iter()
            .enumerate()
        {
            total += l.as_f64();
            if logits.argmax_row(i) == labels[i] {
                correct += 1;
            }
        }
    }
    let count = indices.len();
    Ok(EvalStats {
        loss: total / count as f64,
        accuracy: correct as f64 / count as f64,
        correct,
        count,
    })
}

/// Applies the configured learning-rate schedule between epochs.
#[derive(Debug, Clone)]
pub struct LrController {
    schedule: LrSchedule,
    best_loss: f64,
    last_improvement: u64,
}

impl LrController {
    pub fn new(schedule: LrSchedule) -> Self {
        LrController {
            schedule,
            best_loss: f64::INFINITY,
            last_improvement: 0,
        }
    }

    pub fn after_epoch<S>(&mut self, epoch: u64, step: u64, test_loss: f64, opt: &mut OptimizerState<S>) {
        match self.schedule {
            LrSchedule::Constant => {}
            LrSchedule::StepEvery { epochs, factor } => {
                if epochs > 0 && epoch.is_multiple_of(epochs) {
                    opt.learning_rate *= factor;
                }
            }
            LrSchedule::OnPlateau {
                patience_steps,
                factor,
                min_delta,
            } => {
                if test_loss < self.best_loss - min_delta {
                    self.best_loss = test_loss;
                    self.last_improvement = step;
                } else if step - self.last_improvement >= patience_steps {
                    opt.learning_rate *= factor;
                    self.last_improvement = step;
                }
            }
        }
    }
}

/// Running totals over one epoch.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpochTally {
    loss_sum: f64,
    steps: usize,
    correct: usize,
    count: usize,
}

impl EpochTally {
    pub fn add(&mut self, s: &StepStats) {
        self.loss_sum += s.loss;
        self.steps += 1;
        self.correct += s.correct;
        self.count += s.count;
    }

    pub fn mean_loss(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.loss_sum / self.steps as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.correct as f64 / self.count as f64
        }
    }
}

/// Builds an epoch row from the trainer state.
pub fn epoch_record<S: Real>(
    cfg: &TrainConfig,
    trainer: &Trainer<S>,
    tally: &EpochTally,
    test: &EvalStats,
    k_current: usize,
    t: f64,
    clock: &dyn Clock,
) -> MetricsRecord {
    MetricsRecord {
        run_id: cfg.run_id.clone(),
        epoch: trainer.epoch,
        step: trainer.step,
        train_loss: tally.mean_loss(),
        train_acc: tally.accuracy(),
        test_loss: test.loss,
        test_acc: test.accuracy,
        l2_norm: trainer.l2_norm(),
        k_current,
        t,
        wall_seconds: clock.seconds(),
        event: String::new(),
    }
}

/// Removes and returns one uniformly chosen id from the pool.
pub(crate) fn take_random(pool: &mut Vec<usize>, order: &mut Rng) -> usize {
    let pick = rng::pick_distinct(pool.len(), 1, order)[0];
    pool.remove(pick)
}

/// Baseline loop: each epoch draws a fresh seeded batch split and visits
/// the batches in random order.
pub fn run_plain<S: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    train: &Dataset,
    test: &Dataset,
    clock: &dyn Clock,
) -> Result<(Trainer<S>, Vec<MetricsRecord>)> {
    let mut trainer = Trainer::<S>::new(spec, cfg)?;
    let mut order = rng::stream(cfg.seed, &[purpose::ORDER]);
    let mut lr = LrController::new(cfg.schedule);
    let mut records = Vec::new();
    for epoch in 1..=cfg.epochs {
        trainer.epoch = epoch;
        let batches = split_indices(train.len(), cfg.batch_size, cfg.split_seed(epoch), false)?;
        let mut pool: Vec<usize> = (0..batches.len()).collect();
        let mut tally = EpochTally::default();
        while !pool.is_empty() {
            let id = take_random(&mut pool, &mut order);
            tally.add(&trainer.train_on(train, &batches[id], &Mixing::None, &cfg.preprocess)?);
        }
        let eval = evaluate(&trainer.net, test, &cfg.preprocess, cfg.eval_batch_size)?;
        records.push(epoch_record(cfg, &trainer, &tally, &eval, 1, 0.0, clock));
        lr.after_epoch(epoch, trainer.step, eval.loss, &mut trainer.opt);
    }
    Ok((trainer, records))
}
