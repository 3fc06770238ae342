//! Seeded synthetic datasets for tests and offline experiments.
//!
//! `digits` and `cifar_like` produce images already quantized to multiples
//! of 1/255 so they survive a trip through the byte-oriented file formats
//! unchanged.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::rng::{self, purpose, Rng};
use crate::tensor::Tensor;

/// Gaussian clusters in `dims` dimensions, one per class, with unit noise.
/// Class centres lie on a random direction scaled to `separation`.
pub fn synthetic_blobs(
    num_classes: usize,
    per_class: usize,
    dims: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(separation > 0.0) {
        return Err(Error::InvalidInput(format!(
            "separation {separation} must be positive"
        )));
    }
    if num_classes == 0 || per_class == 0 || dims == 0 {
        return Err(Error::InvalidInput(
            "blobs need classes, samples and dimensions".into(),
        ));
    }
    let mut g = rng::stream(seed, &[purpose::SYNTH, 0]);
    let centres: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let v: Vec<f64> = (0..dims).map(|_| StandardNormal.sample(&mut g)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm * separation).collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(num_classes * per_class);
    for _ in 0..per_class {
        for (label, c) in centres.iter().enumerate() {
            let x: Vec<f32> = c
                .iter()
                .map(|&m| (m + Distribution::<f64>::sample(&StandardNormal, &mut g)) as f32)
                .collect();
            samples.push(Sample {
                image: Tensor::from_vec(&[dims], x)?,
                label,
            });
        }
    }
    Dataset::new(
        samples,
        num_classes,
        format!("blobs classes={num_classes} per_class={per_class} dims={dims} sep={separation} seed={seed}"),
    )
}

fn quantize(v: f64) -> f32 {
    (v.clamp(0.0, 1.0) * 255.0).round() as f32 / 255.0
}

/// Distance from point p to segment ab.
fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn stroke(d: f64, thickness: f64) -> f64 {
    // Soft-edged pen of the given width.
    (1.0 - (d - thickness / 2.0).max(0.0) / 1.2).clamp(0.0, 1.0)
}

/// 28x28 single-channel handwriting-like zeros (rings) and ones (strokes).
/// Labels are 0 and 1; the dataset has two classes.
pub fn digits(per_class: usize, seed: u64) -> Result<Dataset> {
    let mut g = rng::stream(seed, &[purpose::SYNTH, 1]);
    let noise = Normal::new(0.0, 0.12).unwrap();
    let mut samples = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        for label in 0..2 {
            samples.push(Sample {
                image: Tensor::from_vec(&[1, 28, 28], digit_image(label, &mut g, &noise))?,
                label,
            });
        }
    }
    Dataset::new(
        samples,
        2,
        format!("synthetic digits per_class={per_class} seed={seed}"),
    )
}

fn digit_image(label: usize, g: &mut Rng, noise: &Normal<f64>) -> Vec<f32> {
    let cx = 14.0 + g.random_range(-3.0..3.0);
    let cy = 14.0 + g.random_range(-3.0..3.0);
    let thickness = g.random_range(1.0..3.5);
    let ink = g.random_range(0.55..1.0);
    let tilt = g.random_range(-0.35..0.35);
    // A fraction of zeros are narrow and a fraction of ones are curved,
    // so the two classes overlap a little.
    let (rx, ry) = (g.random_range(2.5..7.5), g.random_range(6.0..10.0));
    let bend = g.random_range(-3.0..3.0);
    let half = g.random_range(6.0..10.0);
    let mut img = Vec::with_capacity(28 * 28);
    for y in 0..28 {
        for x in 0..28 {
            let (px, py) = (x as f64 - cx, y as f64 - cy);
            // Undo the slant.
            let (qx, qy) = (
                px * tilt.cos() + py * tilt.sin(),
                -px * tilt.sin() + py * tilt.cos(),
            );
            let d = if label == 0 {
                let r = ((qx / rx).powi(2) + (qy / ry).powi(2)).sqrt();
                (r - 1.0).abs() * rx.min(ry)
            } else {
                let off = bend * (1.0 - (qy / half).powi(2)).max(0.0);
                segment_distance(qx - off, qy, 0.0, -half, 0.0, half)
            };
            let v = ink * stroke(d, thickness) + noise.sample(g);
            img.push(quantize(v));
        }
    }
    img
}

/// 32x32 RGB images in ten classes. Each class combines a colour, an
/// oriented grating and a blob position; samples jitter every factor and
/// add pixel noise.
pub fn cifar_like(per_class: usize, seed: u64) -> Result<Dataset> {
    let mut g = rng::stream(seed, &[purpose::SYNTH, 2]);
    let noise = Normal::new(0.0, 0.18).unwrap();
    let mut samples = Vec::with_capacity(10 * per_class);
    for _ in 0..per_class {
        for label in 0..10 {
            samples.push(Sample {
                image: Tensor::from_vec(&[3, 32, 32], cifar_image(label, &mut g, &noise))?,
                label,
            });
        }
    }
    Dataset::new(
        samples,
        10,
        format!("synthetic cifar-like per_class={per_class} seed={seed}"),
    )
}

fn class_colour(label: usize) -> [f64; 3] {
    let h = label as f64 / 10.0 * 2.0 * PI;
    [
        0.5 + 0.5 * h.cos(),
        0.5 + 0.5 * (h - 2.0 * PI / 3.0).cos(),
        0.5 + 0.5 * (h + 2.0 * PI / 3.0).cos(),
    ]
}

fn cifar_image(label: usize, g: &mut Rng, noise: &Normal<f64>) -> Vec<f32> {
    let colour = class_colour(label);
    let angle = label as f64 * PI / 10.0 + g.random_range(-0.15..0.15);
    let freq = if label.is_multiple_of(2) { 2.0 } else { 3.5 } * g.random_range(0.85..1.15) * 2.0 * PI / 32.0;
    let phase = g.random_range(0.0..2.0 * PI);
    let quadrant = (label * 3) % 4;
    let bx = if quadrant.is_multiple_of(2) { 10.0 } else { 22.0 } + g.random_range(-5.0..5.0);
    let by = if quadrant < 2 { 10.0 } else { 22.0 } + g.random_range(-5.0..5.0);
    let radius = g.random_range(3.5..6.5);
    let contrast = g.random_range(0.35..0.8);
    let background: [f64; 3] = [
        g.random_range(0.2..0.6),
        g.random_range(0.2..0.6),
        g.random_range(0.2..0.6),
    ];
    let (ca, sa) = (angle.cos(), angle.sin());
    let mut img = alloc::vec![0f32; 3 * 32 * 32];
    for y in 0..32 {
        for x in 0..32 {
            let (fx, fy) = (x as f64, y as f64);
            let grating = (freq * (fx * ca + fy * sa) + phase).sin();
            let blob = (-((fx - bx).powi(2) + (fy - by).powi(2)) / (2.0 * radius * radius)).exp();
            for c in 0..3 {
                let v = background[c]
                    + contrast
                        * (0.3 * grating * (colour[c] - 0.5) + 0.6 * blob * (colour[c] - background[c]))
                    + noise.sample(g);
                img[(c * 32 + y) * 32 + x] = quantize(v);
            }
        }
    }
    img
}
