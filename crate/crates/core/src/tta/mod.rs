//! Test Time Sum Augmentation and the gradient attacks it is evaluated
//! against.

mod attack;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::{preprocess, Dataset, PreprocessConfig};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::nn::{softmax, Network};
use crate::real::Real;
use crate::rng::{self, purpose};
use crate::tensor::Tensor;

pub use attack::{attack_batch, fgsm, pgd, AttackConfig, AttackKind};

#[derive(Debug, Clone, PartialEq)]
pub struct TtaConfig {
    /// C: augmented copies averaged per prediction.
    pub copies: usize,
    pub lambda: f64,
    /// K: images summed per augmented copy.
    pub k: usize,
    pub normalize_coefficients: bool,
    pub seed: u64,
}

impl Default for TtaConfig {
    fn default() -> Self {
        TtaConfig {
            copies: 16,
            lambda: 1.0,
            k: 4,
            normalize_coefficients: false,
            seed: 0,
        }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.copies == 0 || self.k == 0 {
            return Err(Error::Config(format!(
                "TTA needs C ≥ 1 and K ≥ 1, got C = {} and K = {}",
                self.copies, self.k
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "TTA weight λ = {} must be positive",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Weight of the query image and of each random co-sample:
    /// `λ/K` and `1/(Kλ)`, optionally rescaled to sum to one.
    pub fn coefficients(&self) -> (f64, f64) {
        let k = self.k as f64;
        let own = self.lambda / k;
        let other = 1.0 / (k * self.lambda);
        if self.normalize_coefficients {
            let total = own + (k - 1.0) * other;
            (own / total, other / total)
        } else {
            (own, other)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtaPrediction {
    pub probabilities: Vec<f64>,
    pub class: usize,
}

/// Averages class probabilities over `C` mixtures of the raw `image` with
/// `K − 1` co-samples drawn with replacement from `pool`. Mixing happens in
/// pixel space, before normalization.
pub fn tta_predict<S: Real>(
    net: &Network<S>,
    image: &[S],
    pool: &Dataset,
    cfg: &TtaConfig,
    pre: &PreprocessConfig,
    rng: &mut rng::Rng,
) -> Result<TtaPrediction> {
    cfg.validate()?;
    if pool.is_empty() && cfg.k > 1 {
        return Err(Error::InvalidInput("TTA co-sample pool is empty".into()));
    }
    let (own, other) = cfg.coefficients();
    let (own, other) = (S::of(own), S::of(other));
    let mut shape = alloc::vec![cfg.copies];
    shape.extend_from_slice(pool.image_shape());
    let mut batch = Tensor::<S>::zeros(&shape);
    if batch.row_len() != image.len() {
        return Err(Error::Shape(format!(
            "image of {} values, pool images hold {}",
            image.len(),
            batch.row_len()
        )));
    }
    for c in 0..cfg.copies {
        let row = batch.row_mut(c);
        for (r, &x) in row.iter_mut().zip(image) {
            *r = own * x;
        }
        for _ in 1..cfg.k {
            let j = rng.random_range(0..pool.len());
            for (r, &x) in row.iter_mut().zip(pool.sample(j).image.data()) {
                *r = *r + other * S::of(f64::from(x));
            }
        }
    }
    let mut unused = rng::stream(0, &[]);
    let inputs = preprocess(&batch, pre, &mut unused, false)?;
    let probs = softmax(&net.forward(&inputs)?)?;
    let classes = probs.row_len();
    let mut mean = alloc::vec![0.0; classes];
    for c in 0..cfg.copies {
        for (m, &p) in mean.iter_mut().zip(probs.row(c)) {
            *m += p.as_f64();
        }
    }
    for m in &mut mean {
        *m /= cfg.copies as f64;
    }
    let mut class = 0;
    for (i, &m) in mean.iter().enumerate() {
        if m > mean[class] {
            class = i;
        }
    }
    Ok(TtaPrediction {
        probabilities: mean,
        class,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtaReport {
    pub accuracy: f64,
    pub correct: usize,
    pub count: usize,
    /// `(correct, total)` per class.
    pub per_class: Vec<(usize, usize)>,
}

/// TTA accuracy over raw images `[n, ...]` with their labels. Image `i`
/// draws its co-samples from its own stream, so workers never interact.
pub fn tta_evaluate_images<S: Real, E: Executor>(
    net: &Network<S>,
    images: &Tensor<S>,
    labels: &[usize],
    pool: &Dataset,
    cfg: &TtaConfig,
    pre: &PreprocessConfig,
    exec: &E,
) -> Result<TtaReport> {
    if images.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} images, {} labels",
            images.rows(),
            labels.len()
        )));
    }
    let predictions = exec.map(labels.len(), |i| {
        let mut g = rng::stream(cfg.seed, &[purpose::TTA, i as u64]);
        tta_predict(net, images.row(i), pool, cfg, pre, &mut g).map(|p| p.class)
    });
    let mut per_class = alloc::vec![(0, 0); net.num_classes()];
    let mut correct = 0;
    for (p, &label) in predictions.into_iter().zip(labels) {
        let hit = p? == label;
        correct += hit as usize;
        per_class[label].0 += hit as usize;
        per_class[label].1 += 1;
    }
    Ok(TtaReport {
        accuracy: correct as f64 / labels.len().max(1) as f64,
        correct,
        count: labels.len(),
        per_class,
    })
}

pub fn tta_evaluate<S: Real, E: Executor>(
    net: &Network<S>,
    data: &Dataset,
    pool: &Dataset,
    cfg: &TtaConfig,
    pre: &PreprocessConfig,
    exec: &E,
) -> Result<TtaReport> {
    let all: Vec<usize> = (0..data.len()).collect();
    let images = data.gather::<S>(&all)?;
    tta_evaluate_images(net, &images, &data.labels(&all), pool, cfg, pre, exec)
}

/// Plain argmax accuracy over raw images.
pub fn plain_accuracy<S: Real>(
    net: &Network<S>,
    images: &Tensor<S>,
    labels: &[usize],
    pre: &PreprocessConfig,
    batch_size: usize,
) -> Result<f64> {
    let mut correct = 0;
    let row_shape = &images.shape()[1..];
    let mut unused = rng::stream(0, &[]);
    for start in (0..labels.len()).step_by(batch_size.max(1)) {
        let end = (start + batch_size.max(1)).min(labels.len());
        let rows: Vec<&[S]> = (start..end).map(|i| images.row(i)).collect();
        let inputs = preprocess(&Tensor::stack(row_shape, &rows)?, pre, &mut unused, false)?;
        let logits = net.forward(&inputs)?;
        correct += (start..end)
            .filter(|&i| logits.argmax_row(i - start) == labels[i])
            .count();
    }
    Ok(correct as f64 / labels.len().max(1) as f64)
}

/// Accuracy table with one column per condition (clean, then each attack)
/// and a plain row plus an optional TTA row.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessTable {
    pub columns: Vec<String>,
    pub plain: Vec<f64>,
    pub tta: Option<Vec<f64>>,
}

/// Adversarial images are computed once per attack against the plain
/// network and shared by the plain and TTA rows.
#[allow(clippy::too_many_arguments)]
pub fn robustness_eval<S: Real, E: Executor>(
    net: &Network<S>,
    data: &Dataset,
    attacks: &[AttackConfig],
    tta: Option<(&TtaConfig, &Dataset)>,
    pre: &PreprocessConfig,
    batch_size: usize,
    exec: &E,
) -> Result<RobustnessTable> {
    let all: Vec<usize> = (0..data.len()).collect();
    let clean = data.gather::<S>(&all)?;
    let labels = data.labels(&all);
    let mut columns = alloc::vec![String::from("clean")];
    let mut sets = alloc::vec![clean.clone()];
    for a in attacks {
        columns.push(a.name());
        sets.push(attack_batch(net, &clean, &labels, a, pre, batch_size)?);
    }
    let plain = sets
        .iter()
        .map(|s| plain_accuracy(net, s, &labels, pre, batch_size))
        .collect::<Result<Vec<_>>>()?;
    let tta = match tta {
        Some((cfg, pool)) => Some(
            sets.iter()
                .map(|s| tta_evaluate_images(net, s, &labels, pool, cfg, pre, exec).map(|r| r.accuracy))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(RobustnessTable { columns, plain, tta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::synthetic_blobs;
    use crate::exec::Serial;
    use crate::nn::{Activation, ModelSpec};
    use crate::train::evaluate;

    fn setup() -> (Network<f32>, Dataset) {
        let data = synthetic_blobs(4, 10, 6, 2.0, 3).unwrap();
        let spec = ModelSpec::mlp(6, &[10], 4, Activation::Tanh);
        let net = Network::init(&spec, &mut rng::stream(1, &[])).unwrap();
        (net, data)
    }

    #[test]
    fn coefficient_sums() {
        let cfg = |lambda, k, n| TtaConfig {
            lambda,
            k,
            normalize_coefficients: n,
            ..Default::default()
        };
        assert_eq!(cfg(1.0, 2, false).coefficients(), (0.5, 0.5));
        let (a, b) = cfg(2.0, 4, false).coefficients();
        assert_eq!(a + 3.0 * b, 0.875);
        let (a, b) = cfg(2.0, 4, true).coefficients();
        assert!((a + 3.0 * b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_configuration_is_plain_evaluation() {
        let (net, data) = setup();
        let pre = PreprocessConfig::default();
        let cfg = TtaConfig {
            copies: 1,
            lambda: 1.0,
            k: 1,
            ..Default::default()
        };
        let tta = tta_evaluate(&net, &data, &data, &cfg, &pre, &Serial).unwrap();
        let plain = evaluate(&net, &data, &pre, 7).unwrap();
        assert_eq!(tta.correct, plain.correct);
        assert_eq!(tta.accuracy.to_bits(), plain.accuracy.to_bits());
    }

    #[test]
    fn prediction_is_a_probability_vector() {
        let (net, data) = setup();
        let mut g = rng::stream(4, &[]);
        let p = tta_predict(
            &net,
            data.sample(0).image.data(),
            &data,
            &TtaConfig::default(),
            &Default::default(),
            &mut g,
        )
        .unwrap();
        assert!(p.probabilities.iter().all(|&x| x >= 0.0));
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn identical_copies_average_to_one_copy() {
        // With K = 1 every copy is the query image itself.
        let (net, data) = setup();
        let one = TtaConfig {
            copies: 1,
            k: 1,
            ..Default::default()
        };
        let two = TtaConfig {
            copies: 2,
            k: 1,
            ..Default::default()
        };
        let mut g = rng::stream(0, &[]);
        let img = data.sample(3).image.data();
        let a = tta_predict(&net, img, &data, &one, &Default::default(), &mut g).unwrap();
        let b = tta_predict(&net, img, &data, &two, &Default::default(), &mut g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn robustness_without_attacks_is_clean_only() {
        let (net, data) = setup();
        let t = robustness_eval(&net, &data, &[], None, &Default::default(), 16, &Serial).unwrap();
        assert_eq!(t.columns, ["clean"]);
        assert_eq!(t.plain.len(), 1);
        assert!(t.tta.is_none());
    }
}
