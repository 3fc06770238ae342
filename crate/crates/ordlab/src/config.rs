//! Flat `key = value` experiment configuration.
//!
//! Every key is declared in [`SCHEMA`] with a type and a default. Values
//! are stored in canonical text form, so echoing a resolved configuration
//! and parsing the echo gives back an equal value.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Kind {
    Int,
    Float,
    Bool,
    Str,
    /// Existing file; empty means unset.
    File,
    Files,
    Choice(&'static [&'static str]),
    Ints,
    Floats,
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key { name, kind, default }
}

use Kind::*;

const SCHEMA: &[Key] = &[
    key("run.seed", Int, "0"),
    key("run.id", Str, "run"),
    key("run.output_dir", Str, "out"),
    key(
        "dataset.kind",
        Choice(&["synthetic-cifar", "synthetic-digits", "blobs", "cifar10", "mnist"]),
        "synthetic-cifar",
    ),
    key("dataset.seed", Int, "0"),
    key("dataset.train_files", Files, ""),
    key("dataset.test_files", Files, ""),
    key("dataset.train_images", File, ""),
    key("dataset.train_labels", File, ""),
    key("dataset.test_images", File, ""),
    key("dataset.test_labels", File, ""),
    key("dataset.classes", Ints, ""),
    key("dataset.per_class", Int, "0"),
    key("dataset.test_per_class", Int, "0"),
    key("dataset.synthetic_per_class", Int, "100"),
    key("dataset.synthetic_test_per_class", Int, "50"),
    key("dataset.blob_classes", Int, "3"),
    key("dataset.blob_dims", Int, "8"),
    key("dataset.blob_separation", Float, "3"),
    key("dataset.mean", Floats, ""),
    key("dataset.std", Floats, ""),
    key("dataset.flip_prob", Float, "0"),
    key("dataset.crop_padding", Int, "0"),
    key("model.arch", Choice(&["conv", "mlp"]), "conv"),
    key("model.precision", Choice(&["f32", "f64"]), "f32"),
    key("model.hidden", Ints, "64"),
    key("model.activation", Choice(&["relu", "tanh"]), "relu"),
    key("model.conv_channels", Ints, "8,16"),
    key("model.kernel", Int, "3"),
    key("model.stride", Int, "1"),
    key("model.pool", Bool, "true"),
    key("model.classifier_width", Int, "0"),
    key("optim.lr", Float, "0.05"),
    key("optim.momentum", Float, "0.9"),
    key("optim.weight_decay", Float, "0.0001"),
    key("optim.nesterov", Bool, "true"),
    key("optim.batch_size", Int, "100"),
    key("optim.epochs", Int, "3"),
    key("optim.eval_batch_size", Int, "256"),
    key(
        "optim.schedule",
        Choice(&["constant", "step", "plateau"]),
        "constant",
    ),
    key("optim.step_epochs", Int, "30"),
    key("optim.step_factor", Float, "0.5"),
    key("optim.plateau_patience", Int, "300"),
    key("optim.plateau_factor", Float, "0.5"),
    key("optim.plateau_min_delta", Float, "0.0001"),
    key(
        "poa.scorer",
        Choice(&["sample-loss", "max-loss-delta-same", "max-loss-delta-external"]),
        "sample-loss",
    ),
    key("poa.delta_mode", Choice(&["absolute", "relative"]), "absolute"),
    key("poa.reference_size", Int, "512"),
    key("poa.reference_resample", Bool, "true"),
    key(
        "poa.strategy",
        Choice(&[
            "order-ascending",
            "order-descending",
            "sample-direct",
            "sample-inverse",
        ]),
        "order-ascending",
    ),
    key("poa.candidates", Int, "8"),
    key("poa.rescore", Choice(&["step", "epoch"]), "step"),
    key("poa.item_kind", Choice(&["batch", "sample"]), "batch"),
    key("poa.epsilon", Float, "0.00000001"),
    key("explorer.clusters", Int, "12"),
    key("explorer.budget", Int, "200000"),
    key("sumaug.start_k", Int, "4"),
    key("sumaug.patience_steps", Int, "300"),
    key("sumaug.min_delta", Float, "0.0001"),
    key("sumaug.stop_at_k", Int, "1"),
    key("sumaug.max_stage_epochs", Int, "100"),
    key(
        "sumaug.coefficients",
        Choice(&["average", "beta", "uniform"]),
        "average",
    ),
    key("sumaug.beta_alpha", Float, "1"),
    key("sumaug.gradual_n", Int, "4"),
    key("sumaug.gradual_epochs", Int, "10"),
    key("sumaug.finetune_epochs", Int, "5"),
    key("sumaug.spike_factor", Float, "5"),
    key("tta.checkpoint", File, ""),
    key("tta.copies", Int, "16"),
    key("tta.lambda", Float, "1"),
    key("tta.k", Int, "4"),
    key("tta.pool", Choice(&["test", "train"]), "test"),
    key("tta.normalize", Bool, "false"),
    key("tta.seed", Int, "0"),
    key("attack.kinds", Str, "fgsm,pgd"),
    key("attack.epsilon", Float, "8/255"),
    key("attack.pgd_step", Float, "2/255"),
    key("attack.pgd_steps", Int, "10"),
    key("attack.use_tta", Bool, "true"),
    key("plot.input", File, ""),
    key("plot.metrics", Str, ""),
];

fn spec(name: &str) -> Option<&'static Key> {
    SCHEMA.iter().find(|k| k.name == name)
}

fn parse_float(raw: &str) -> Option<f64> {
    match raw.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => raw.parse().ok(),
    }
    .filter(|v: &f64| v.is_finite())
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Checks `raw` against the key's type and returns its canonical form.
/// Relative file paths are resolved against `base`.
fn canonical(k: &Key, raw: &str, base: &Path) -> Result<String> {
    let bad = |what: &str| Error::config(k.name, format!("expected {what}, got `{raw}`"));
    let file = |p: &str| -> Result<String> {
        let path = if Path::new(p).is_absolute() {
            PathBuf::from(p)
        } else {
            base.join(p)
        };
        if !path.is_file() {
            return Err(Error::config(
                k.name,
                format!("file {} does not exist", path.display()),
            ));
        }
        Ok(path.display().to_string())
    };
    Ok(match k.kind {
        Int => raw
            .parse::<u64>()
            .map_err(|_| bad("a nonnegative integer"))?
            .to_string(),
        Float => parse_float(raw).ok_or_else(|| bad("a number"))?.to_string(),
        Bool => match raw {
            "true" | "yes" | "1" => "true".into(),
            "false" | "no" | "0" => "false".into(),
            _ => return Err(bad("true or false")),
        },
        Str => raw.to_string(),
        File if raw.is_empty() => String::new(),
        File => file(raw)?,
        Files => list(raw).map(file).collect::<Result<Vec<_>>>()?.join(","),
        Choice(options) => {
            if !options.contains(&raw) {
                return Err(bad(&format!("one of {}", options.join(", "))));
            }
            raw.to_string()
        }
        Ints => list(raw)
            .map(|v| {
                v.parse::<u64>()
                    .map(|v| v.to_string())
                    .map_err(|_| bad("comma-separated integers"))
            })
            .collect::<Result<Vec<_>>>()?
            .join(","),
        Floats => list(raw)
            .map(|v| {
                parse_float(v)
                    .map(|v| v.to_string())
                    .ok_or_else(|| bad("comma-separated numbers"))
            })
            .collect::<Result<Vec<_>>>()?
            .join(","),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            values: SCHEMA.iter().map(|k| (k.name, k.default.to_string())).collect(),
        }
        .canonicalized()
    }
}

impl ExperimentConfig {
    fn canonicalized(mut self) -> Self {
        for k in SCHEMA {
            if !matches!(k.kind, File | Files) {
                let v =
                    canonical(k, &self.values[k.name], Path::new(".")).expect("schema defaults are valid");
                self.values.insert(k.name, v);
            }
        }
        self
    }

    /// Parses configuration text. `base` anchors relative file paths and
    /// `origin` names the source in error messages.
    pub fn parse_str(text: &str, base: &Path, origin: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((name, raw)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("{origin}:{}", n + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let name = name.trim();
            let k = spec(name).ok_or_else(|| Error::config(name, "unknown key"))?;
            if let Some(first) = seen.insert(name.to_string(), n + 1) {
                return Err(Error::config(
                    name,
                    format!("set twice (lines {first} and {})", n + 1),
                ));
            }
            cfg.values.insert(k.name, canonical(k, raw.trim(), base)?);
        }
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_str(&text, base, &path.display().to_string())
    }

    pub fn set(&mut self, name: &str, raw: &str) -> Result<()> {
        let k = spec(name).ok_or_else(|| Error::config(name, "unknown key"))?;
        self.values.insert(k.name, canonical(k, raw, Path::new("."))?);
        Ok(())
    }

    /// The resolved configuration, one `key = value` line per key.
    pub fn echo(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn raw(&self, name: &str) -> &str {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("`{name}` is not a schema key"))
    }

    pub fn str(&self, name: &str) -> String {
        self.raw(name).to_string()
    }

    pub fn u64(&self, name: &str) -> u64 {
        self.raw(name).parse().expect("validated integer")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.u64(name) as usize
    }

    pub fn f64(&self, name: &str) -> f64 {
        self.raw(name).parse().expect("validated number")
    }

    pub fn bool(&self, name: &str) -> bool {
        self.raw(name) == "true"
    }

    pub fn usizes(&self, name: &str) -> Vec<usize> {
        list(self.raw(name))
            .map(|v| v.parse().expect("validated integer"))
            .collect()
    }

    pub fn f64s(&self, name: &str) -> Vec<f64> {
        list(self.raw(name))
            .map(|v| v.parse().expect("validated number"))
            .collect()
    }

    pub fn paths(&self, name: &str) -> Vec<PathBuf> {
        list(self.raw(name)).map(PathBuf::from).collect()
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        let v = self.raw(name);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    /// Like [`Self::usize`] but rejects zero.
    pub fn positive(&self, name: &str) -> Result<usize> {
        match self.usize(name) {
            0 => Err(Error::config(name, "must be at least 1")),
            v => Ok(v),
        }
    }
}
