//! Turns a resolved configuration into core calls and artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ordlab_core::data::synthetic::{cifar_like, digits, synthetic_blobs};
use ordlab_core::data::{subset_per_class, Dataset, PreprocessConfig};
use ordlab_core::explorer::{explore, ExploreConfig};
use ordlab_core::metrics::{Clock, MetricsRecord};
use ordlab_core::nn::{hex, Activation, Architecture, ConvBlock, LrSchedule, ModelSpec, Network};
use ordlab_core::poa::{
    run_poa_training, DeltaMode, ItemKind, LoaderConfig, Rescore, ScorerKind, StrategyKind,
};
use ordlab_core::rng;
use ordlab_core::sumaug::{
    run_cascade, run_gradual_cascade, spike_flags, CascadeConfig, CoefficientSource, GradualConfig,
};
use ordlab_core::train::{run_plain, TrainConfig, Trainer};
use ordlab_core::tta::{plain_accuracy, robustness_eval, tta_evaluate, AttackConfig, AttackKind, TtaConfig};
use ordlab_core::Real;

use crate::checkpoint_io::{load_checkpoint, save_checkpoint};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exec::ThreadPool;
use crate::formats::{load_cifar10, load_mnist_idx};
use crate::report::{
    distribution_csv, emit_plots, event_log, ledger_csv, metrics_csv, robustness_csv, tta_csv, write_text,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Explore,
    Poa,
    Cascade,
    Gradual,
    Tta,
    AttackEval,
    Plot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Explore => "explore",
            Command::Poa => "poa",
            Command::Cascade => "cascade",
            Command::Gradual => "gradual",
            Command::Tta => "tta",
            Command::AttackEval => "attack-eval",
            Command::Plot => "plot",
        }
    }
}

pub struct WallClock(Instant);

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub struct Data {
    pub train: Dataset,
    pub test: Dataset,
}

fn restrict(cfg: &ExperimentConfig, data: Dataset, per_class_key: &str, seed: u64) -> Result<Dataset> {
    let classes = cfg.usizes("dataset.classes");
    let per_class = cfg.usize(per_class_key);
    let classes = (!classes.is_empty()).then_some(classes);
    if per_class > 0 {
        return subset_per_class(&data, per_class, classes.as_deref(), seed)
            .map_err(|e| Error::config(per_class_key, e.to_string()));
    }
    match classes {
        None => Ok(data),
        Some(keep) => {
            let samples = data
                .samples()
                .iter()
                .filter(|s| keep.contains(&s.label))
                .cloned()
                .collect();
            Dataset::new(
                samples,
                data.num_classes(),
                format!("{} | classes={keep:?}", data.provenance()),
            )
            .map_err(|e| Error::config("dataset.classes", e.to_string()))
        }
    }
}

fn required_file(cfg: &ExperimentConfig, key: &str) -> Result<PathBuf> {
    cfg.path(key)
        .ok_or_else(|| Error::config(key, "required for this dataset kind"))
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<Data> {
    let seed = cfg.u64("dataset.seed");
    let test_seed = rng::derive_seed(seed, &[1]);
    let (train, test) = match cfg.raw("dataset.kind") {
        "synthetic-cifar" => (
            cifar_like(cfg.positive("dataset.synthetic_per_class")?, seed)?,
            cifar_like(cfg.positive("dataset.synthetic_test_per_class")?, test_seed)?,
        ),
        "synthetic-digits" => (
            digits(cfg.positive("dataset.synthetic_per_class")?, seed)?,
            digits(cfg.positive("dataset.synthetic_test_per_class")?, test_seed)?,
        ),
        "blobs" => {
            // Train and test must share class centres, so draw both from one
            // generator and cut.
            let (c, d, sep) = (
                cfg.positive("dataset.blob_classes")?,
                cfg.positive("dataset.blob_dims")?,
                cfg.f64("dataset.blob_separation"),
            );
            let (n_train, n_test) = (
                cfg.positive("dataset.synthetic_per_class")?,
                cfg.positive("dataset.synthetic_test_per_class")?,
            );
            let all = synthetic_blobs(c, n_train + n_test, d, sep, seed)?;
            let (train, test) = all.samples().split_at(n_train * c);
            let provenance = all.provenance();
            (
                Dataset::new(train.to_vec(), c, format!("{provenance} | train"))?,
                Dataset::new(test.to_vec(), c, format!("{provenance} | test"))?,
            )
        }
        "cifar10" => {
            let (tr, te) = (cfg.paths("dataset.train_files"), cfg.paths("dataset.test_files"));
            if tr.is_empty() || te.is_empty() {
                return Err(Error::config(
                    "dataset.train_files",
                    "cifar10 needs train and test files",
                ));
            }
            (load_cifar10(&tr)?, load_cifar10(&te)?)
        }
        "mnist" => (
            load_mnist_idx(
                &required_file(cfg, "dataset.train_images")?,
                &required_file(cfg, "dataset.train_labels")?,
            )?,
            load_mnist_idx(
                &required_file(cfg, "dataset.test_images")?,
                &required_file(cfg, "dataset.test_labels")?,
            )?,
        ),
        other => unreachable!("schema admits no dataset kind {other}"),
    };
    Ok(Data {
        train: restrict(cfg, train, "dataset.per_class", seed)?,
        test: restrict(cfg, test, "dataset.test_per_class", test_seed)?,
    })
}

pub fn model_spec(cfg: &ExperimentConfig, data: &Dataset) -> Result<ModelSpec> {
    let arch = match cfg.raw("model.arch") {
        "mlp" => Architecture::Mlp {
            hidden: cfg.usizes("model.hidden"),
            activation: if cfg.raw("model.activation") == "tanh" {
                Activation::Tanh
            } else {
                Activation::Relu
            },
        },
        _ => {
            let channels = cfg.usizes("model.conv_channels");
            if channels.is_empty() {
                return Err(Error::config(
                    "model.conv_channels",
                    "conv net needs at least one block",
                ));
            }
            let blocks = channels
                .into_iter()
                .map(|c| ConvBlock {
                    channels: c,
                    kernel: cfg.usize("model.kernel"),
                    stride: cfg.usize("model.stride"),
                    pool: cfg.bool("model.pool"),
                })
                .collect();
            let width = cfg.usize("model.classifier_width");
            Architecture::SmallConv {
                blocks,
                classifier_width: (width > 0).then_some(width),
            }
        }
    };
    let spec = ModelSpec {
        input_shape: data.image_shape().to_vec(),
        arch,
        num_classes: data.num_classes(),
    };
    // Surface architecture problems as configuration errors.
    Network::<f32>::zeros(&spec).map_err(|e| Error::config("model.arch", e.to_string()))?;
    Ok(spec)
}

pub fn preprocess_config(cfg: &ExperimentConfig, data: &Dataset) -> Result<PreprocessConfig> {
    let pre = PreprocessConfig {
        mean: cfg.f64s("dataset.mean"),
        std: cfg.f64s("dataset.std"),
        flip_prob: cfg.f64("dataset.flip_prob"),
        crop_padding: cfg.usize("dataset.crop_padding"),
    };
    pre.validate(data.image_shape()[0])
        .map_err(|e| Error::config("dataset.mean", e.to_string()))?;
    Ok(pre)
}

pub fn train_config(cfg: &ExperimentConfig, pre: PreprocessConfig) -> Result<TrainConfig> {
    let schedule = match cfg.raw("optim.schedule") {
        "step" => LrSchedule::StepEvery {
            epochs: cfg.u64("optim.step_epochs"),
            factor: cfg.f64("optim.step_factor"),
        },
        "plateau" => LrSchedule::OnPlateau {
            patience_steps: cfg.u64("optim.plateau_patience"),
            factor: cfg.f64("optim.plateau_factor"),
            min_delta: cfg.f64("optim.plateau_min_delta"),
        },
        _ => LrSchedule::Constant,
    };
    Ok(TrainConfig {
        run_id: cfg.str("run.id"),
        seed: cfg.u64("run.seed"),
        epochs: cfg.u64("optim.epochs"),
        batch_size: cfg.positive("optim.batch_size")?,
        learning_rate: cfg.f64("optim.lr"),
        momentum: cfg.f64("optim.momentum"),
        weight_decay: cfg.f64("optim.weight_decay"),
        nesterov: cfg.bool("optim.nesterov"),
        schedule,
        preprocess: pre,
        eval_batch_size: cfg.positive("optim.eval_batch_size")?,
    })
}

pub fn loader_config(cfg: &ExperimentConfig) -> Result<LoaderConfig> {
    let mode = if cfg.raw("poa.delta_mode") == "relative" {
        DeltaMode::Relative
    } else {
        DeltaMode::Absolute
    };
    Ok(LoaderConfig {
        scorer: match cfg.raw("poa.scorer") {
            "max-loss-delta-same" => ScorerKind::MaxLossDeltaSame(mode),
            "max-loss-delta-external" => ScorerKind::MaxLossDeltaExternal {
                reference_size: cfg.positive("poa.reference_size")?,
                resample_per_epoch: cfg.bool("poa.reference_resample"),
                mode,
            },
            _ => ScorerKind::SampleLoss,
        },
        strategy: match cfg.raw("poa.strategy") {
            "order-descending" => StrategyKind::OrderDescending,
            "sample-direct" => StrategyKind::SampleWeightedDirect,
            "sample-inverse" => StrategyKind::SampleWeightedInverse,
            _ => StrategyKind::OrderAscending,
        },
        candidates: cfg.positive("poa.candidates")?,
        rescore: if cfg.raw("poa.rescore") == "epoch" {
            Rescore::PerEpoch
        } else {
            Rescore::PerStep
        },
        item_kind: if cfg.raw("poa.item_kind") == "sample" {
            ItemKind::Sample
        } else {
            ItemKind::Batch
        },
        epsilon: cfg.f64("poa.epsilon"),
    })
}

pub fn cascade_config(cfg: &ExperimentConfig) -> Result<CascadeConfig> {
    Ok(CascadeConfig {
        start_k: cfg.positive("sumaug.start_k")?,
        patience_steps: cfg.u64("sumaug.patience_steps"),
        min_delta: cfg.f64("sumaug.min_delta"),
        stop_at_k: cfg.positive("sumaug.stop_at_k")?,
        max_stage_epochs: cfg.positive("sumaug.max_stage_epochs")? as u64,
        coefficients: match cfg.raw("sumaug.coefficients") {
            "beta" => CoefficientSource::Beta(cfg.f64("sumaug.beta_alpha")),
            "uniform" => CoefficientSource::Uniform,
            _ => CoefficientSource::Average,
        },
    })
}

pub fn tta_config(cfg: &ExperimentConfig) -> Result<TtaConfig> {
    let t = TtaConfig {
        copies: cfg.positive("tta.copies")?,
        lambda: cfg.f64("tta.lambda"),
        k: cfg.positive("tta.k")?,
        normalize_coefficients: cfg.bool("tta.normalize"),
        seed: cfg.u64("tta.seed"),
    };
    t.validate()
        .map_err(|e| Error::config("tta.lambda", e.to_string()))?;
    Ok(t)
}

pub fn attack_configs(cfg: &ExperimentConfig) -> Result<Vec<AttackConfig>> {
    let epsilon = cfg.f64("attack.epsilon");
    cfg.raw("attack.kinds")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kind| {
            let kind = match kind {
                "fgsm" => AttackKind::Fgsm,
                "pgd" => AttackKind::Pgd {
                    step_size: cfg.f64("attack.pgd_step"),
                    steps: cfg.positive("attack.pgd_steps")?,
                },
                other => return Err(Error::config("attack.kinds", format!("unknown attack `{other}`"))),
            };
            let a = AttackConfig { kind, epsilon };
            a.validate()
                .map_err(|e| Error::config("attack.epsilon", e.to_string()))?;
            Ok(a)
        })
        .collect()
}

/// Where a run writes, plus the worker count for parallel stages.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub workers: usize,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        write_text(&p, text)?;
        Ok(p)
    }

    fn write_metrics(&self, records: &[MetricsRecord], extra_events: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![
            self.write("metrics.csv", &metrics_csv(records)?)?,
            self.write("events.log", &format!("{}{extra_events}", event_log(records)))?,
        ])
    }
}

/// Runs a subcommand and returns the artifacts it wrote.
pub fn run(cmd: Command, ctx: &Context) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    let mut written = vec![ctx.write("config.resolved.txt", &ctx.cfg.echo())?];
    if cmd == Command::Plot {
        let input = ctx
            .cfg
            .path("plot.input")
            .unwrap_or_else(|| ctx.path("metrics.csv"));
        let text = fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
        let metrics: Vec<String> = ctx
            .cfg
            .raw("plot.metrics")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        written.extend(emit_plots(
            &text,
            &input.display().to_string(),
            &metrics,
            &ctx.path("plots"),
        )?);
        return Ok(written);
    }
    let data = load_data(&ctx.cfg)?;
    let spec = model_spec(&ctx.cfg, &data.train)?;
    match ctx.cfg.raw("model.precision") {
        "f64" => written.extend(run_typed::<f64>(cmd, ctx, &data, &spec)?),
        _ => written.extend(run_typed::<f32>(cmd, ctx, &data, &spec)?),
    }
    Ok(written)
}

fn spike_report(records: &[MetricsRecord], factor: f64) -> String {
    let epochs: Vec<&MetricsRecord> = records.iter().filter(|r| !r.is_event()).collect();
    let norms: Vec<f64> = epochs.iter().map(|r| r.l2_norm).collect();
    spike_flags(&norms, factor)
        .into_iter()
        .map(|i| {
            format!(
                "l2 spike: epoch {} norm {} (previous {})\n",
                epochs[i].epoch,
                norms[i],
                norms[i - 1]
            )
        })
        .collect()
}

fn trained_model<S: Real>(
    ctx: &Context,
    data: &Data,
    spec: &ModelSpec,
    tc: &TrainConfig,
) -> Result<(Trainer<S>, Vec<PathBuf>)> {
    if let Some(p) = ctx.cfg.path("tta.checkpoint") {
        let ck = load_checkpoint::<S>(&p)?;
        return Ok((Trainer::from_checkpoint(spec, &ck)?, Vec::new()));
    }
    let clock = WallClock(Instant::now());
    let out = run_cascade::<S>(
        spec,
        tc,
        &cascade_config(&ctx.cfg)?,
        &data.train,
        &data.test,
        &clock,
    )?;
    let p = ctx.path("model.ckpt");
    save_checkpoint(&p, &out.trainer.snapshot())?;
    let mut files = vec![p];
    files.extend(ctx.write_metrics(&out.records, "")?);
    Ok((out.trainer, files))
}

fn run_typed<S: Real>(cmd: Command, ctx: &Context, data: &Data, spec: &ModelSpec) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.cfg;
    let pre = preprocess_config(cfg, &data.train)?;
    let tc = train_config(cfg, pre.clone())?;
    let clock = WallClock(Instant::now());
    let pool = ThreadPool::new(ctx.workers);
    let final_ck = ctx.path("final.ckpt");
    let mut files = Vec::new();
    match cmd {
        Command::Train => {
            let (trainer, records) = run_plain::<S>(spec, &tc, &data.train, &data.test, &clock)?;
            save_checkpoint(&final_ck, &trainer.snapshot())?;
            files.push(final_ck);
            files.extend(ctx.write_metrics(&records, "")?);
        }
        Command::Poa => {
            let out = run_poa_training::<S, _>(
                spec,
                &tc,
                &loader_config(cfg)?,
                &data.train,
                &data.test,
                &pool,
                &clock,
            )?;
            save_checkpoint(&final_ck, &out.trainer.snapshot())?;
            files.push(final_ck);
            files.extend(ctx.write_metrics(&out.records, "")?);
        }
        Command::Cascade => {
            let out = run_cascade::<S>(spec, &tc, &cascade_config(cfg)?, &data.train, &data.test, &clock)?;
            save_checkpoint(&final_ck, &out.trainer.snapshot())?;
            files.push(final_ck);
            let mut extra = String::new();
            for s in &out.stages {
                extra.push_str(&format!(
                    "stage K={}: {} epochs, best test_acc {}, reloaded test_acc {}, ended at step {}\n",
                    s.k, s.epochs, s.best_test_acc, s.reloaded_test_acc, s.end_step
                ));
            }
            extra.push_str(&spike_report(&out.records, cfg.f64("sumaug.spike_factor")));
            files.extend(ctx.write_metrics(&out.records, &extra)?);
        }
        Command::Gradual => {
            let g = GradualConfig {
                n: cfg.positive("sumaug.gradual_n")?,
                nr_epochs: cfg.positive("sumaug.gradual_epochs")? as u64,
                nr_finetune_epochs: cfg.u64("sumaug.finetune_epochs"),
            };
            let (trainer, records) =
                run_gradual_cascade::<S>(spec, &tc, &g, &data.train, &data.test, &clock)?;
            save_checkpoint(&final_ck, &trainer.snapshot())?;
            files.push(final_ck);
            files.extend(
                ctx.write_metrics(&records, &spike_report(&records, cfg.f64("sumaug.spike_factor")))?,
            );
        }
        Command::Explore => {
            let ex = ExploreConfig {
                clusters: cfg.positive("explorer.clusters")?,
                budget: u128::from(cfg.u64("explorer.budget")),
            };
            let out = explore::<S, _>(spec, &tc, &ex, &data.train, &data.test, &pool)?;
            files.push(ctx.write("ledger.csv", &ledger_csv(&out.ledger)?)?);
            files.push(ctx.write("distribution.csv", &distribution_csv(&out.distributions)?)?);
            files.push(ctx.write(
                "events.log",
                &format!(
                    "initial checkpoint {}\nruns {}\n",
                    hex(&out.initial_hash),
                    out.ledger.len()
                ),
            )?);
            for ck in &out.representatives {
                let p = ctx.path(&format!("representatives/{}.ckpt", hex(&ck.content_hash())));
                save_checkpoint(&p, ck)?;
                files.push(p);
            }
        }
        Command::Tta => {
            let (trainer, model_files) = trained_model::<S>(ctx, data, spec, &tc)?;
            files.extend(model_files);
            let t = tta_config(cfg)?;
            let source = if cfg.raw("tta.pool") == "train" {
                &data.train
            } else {
                &data.test
            };
            let report = tta_evaluate(&trainer.net, &data.test, source, &t, &pre, &pool)?;
            let all: Vec<usize> = (0..data.test.len()).collect();
            let plain = plain_accuracy(
                &trainer.net,
                &data.test.gather::<S>(&all)?,
                &data.test.labels(&all),
                &pre,
                tc.eval_batch_size,
            )?;
            files.push(ctx.write("tta.csv", &tta_csv(plain, &report)?)?);
        }
        Command::AttackEval => {
            let (trainer, model_files) = trained_model::<S>(ctx, data, spec, &tc)?;
            files.extend(model_files);
            let t = tta_config(cfg)?;
            let source = if cfg.raw("tta.pool") == "train" {
                &data.train
            } else {
                &data.test
            };
            let tta = cfg.bool("attack.use_tta").then_some((&t, source));
            let table = robustness_eval(
                &trainer.net,
                &data.test,
                &attack_configs(cfg)?,
                tta,
                &pre,
                tc.eval_batch_size,
                &pool,
            )?;
            files.push(ctx.write("robustness.csv", &robustness_csv(&cfg.str("run.id"), &table)?)?);
        }
        Command::Plot => unreachable!("handled before data loading"),
    }
    Ok(files)
}

/// Metrics CSV text with the wall-clock column blanked, for determinism
/// comparisons.
pub fn without_wall_seconds(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|line| {
            let mut cells: Vec<&str> = line.split(',').collect();
            if cells.len() > 10 {
                cells[10] = "";
            }
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    Path::new(cfg.raw("run.output_dir")).to_path_buf()
}
