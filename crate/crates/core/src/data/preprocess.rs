use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Normalization constants and train-time augmentation settings.
///
/// Empty `mean`/`std` disables normalization. Flips and crops only apply
/// to `[c, h, w]` images.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreprocessConfig {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub flip_prob: f64,
    pub crop_padding: usize,
}

impl PreprocessConfig {
    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.mean.len() != self.std.len() {
            return Err(Error::Config(format!(
                "{} means but {} standard deviations",
                self.mean.len(),
                self.std.len()
            )));
        }
        if !self.mean.is_empty() && self.mean.len() != channels {
            return Err(Error::Config(format!(
                "normalization has {} channels, data has {channels}",
                self.mean.len()
            )));
        }
        if self.std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("standard deviations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::Config(format!(
                "flip probability {} outside [0, 1]",
                self.flip_prob
            )));
        }
        Ok(())
    }

    pub fn normalizes(&self) -> bool {
        !self.mean.is_empty()
    }
}

/// Mirrors every row of a `[c, h, w]` image in place.
pub fn flip_horizontal<S: Copy>(image: &mut [S], c: usize, h: usize, w: usize) {
    for plane in 0..c {
        for y in 0..h {
            image[(plane * h + y) * w..][..w].reverse();
        }
    }
}

fn crop<S: Real>(image: &[S], c: usize, h: usize, w: usize, pad: usize, dy: usize, dx: usize) -> Vec<S> {
    // Window origin (dy, dx) in the zero-padded image.
    let mut out = alloc::vec![S::zero(); c * h * w];
    for plane in 0..c {
        for y in 0..h {
            let sy = (y + dy) as isize - pad as isize;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            for x in 0..w {
                let sx = (x + dx) as isize - pad as isize;
                if sx < 0 || sx >= w as isize {
                    continue;
                }
                out[(plane * h + y) * w + x] = image[(plane * h + sy as usize) * w + sx as usize];
            }
        }
    }
    out
}

/// Applies crop and flip (train mode only) then per-channel normalization.
///
/// Random draws per sample, in order: crop offsets (when padding > 0), then
/// the flip coin (when the probability is positive). No draws happen when
/// augmentation is off.
pub fn preprocess<S: Real>(
    batch: &Tensor<S>,
    config: &PreprocessConfig,
    rng: &mut Rng,
    train_mode: bool,
) -> Result<Tensor<S>> {
    let shape = batch.shape();
    let is_image = shape.len() == 4;
    let channels = if is_image { shape[1] } else { 1 };
    config.validate(channels)?;
    let mut out = batch.clone();
    let m = batch.rows();
    if is_image && train_mode {
        let (c, h, w) = (shape[1], shape[2], shape[3]);
        let pad = config.crop_padding;
        for i in 0..m {
            let row = out.row_mut(i);
            if pad > 0 {
                let dy = rng.random_range(0..=2 * pad);
                let dx = rng.random_range(0..=2 * pad);
                let cropped = crop(row, c, h, w, pad, dy, dx);
                row.copy_from_slice(&cropped);
            }
            if config.flip_prob > 0.0 && rng.random_bool(config.flip_prob) {
                flip_horizontal(row, c, h, w);
            }
        }
    }
    if config.normalizes() {
        let per_channel = out.row_len() / channels;
        let mean: Vec<S> = config.mean.iter().map(|&v| S::of(v)).collect();
        let inv: Vec<S> = config.std.iter().map(|&v| S::of(1.0 / v)).collect();
        for i in 0..m {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                let ch = j / per_channel;
                *v = (*v - mean[ch]) * inv[ch];
            }
        }
    }
    Ok(out)
}
