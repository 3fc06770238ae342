//! Datasets, subsets, preprocessing and batch splitting.

mod batches;
mod preprocess;
mod subset;
pub mod synthetic;

pub use batches::{batch_split, split_indices};
pub use preprocess::{flip_horizontal, preprocess, PreprocessConfig};
pub use subset::subset_per_class;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// One labelled image, pixels in `[0, 1]` for decoded image formats.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Tensor<f32>,
    pub label: usize,
}

/// Immutable ordered collection of samples sharing one image shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    num_classes: usize,
    image_shape: Vec<usize>,
    provenance: String,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, num_classes: usize, provenance: impl Into<String>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidInput("dataset must not be empty".into()))?;
        let image_shape = first.image.shape().to_vec();
        for (i, s) in samples.iter().enumerate() {
            if s.image.shape() != image_shape.as_slice() {
                return Err(Error::Shape(format!(
                    "sample {i} has shape {:?}, expected {image_shape:?}",
                    s.image.shape()
                )));
            }
            if s.label >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "sample {i} label {} out of range for {num_classes} classes",
                    s.label
                )));
            }
        }
        Ok(Dataset {
            samples,
            num_classes,
            image_shape,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn image_shape(&self) -> &[usize] {
        &self.image_shape
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.samples[i].label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Raw (unnormalized) batch tensor for the given sample indices.
    pub fn gather<S: Real>(&self, indices: &[usize]) -> Result<Tensor<S>> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let w: usize = self.image_shape.iter().product();
        let mut data = Vec::with_capacity(w * indices.len());
        for &i in indices {
            let s = self.samples.get(i).ok_or_else(|| {
                Error::InvalidInput(format!("sample index {i} out of range ({})", self.len()))
            })?;
            data.extend(s.image.data().iter().map(|&v| S::of(v as f64)));
        }
        let mut shape = alloc::vec![indices.len()];
        shape.extend_from_slice(&self.image_shape);
        Tensor::from_vec(&shape, data)
    }

    pub(crate) fn with_samples(&self, samples: Vec<Sample>, provenance: String) -> Result<Self> {
        Dataset::new(samples, self.num_classes, provenance)
    }
}
