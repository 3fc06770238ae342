use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

/// One convolution block: `kernel`x`kernel` convolution with "same" padding
/// (`kernel / 2`), activation, then an optional 2x2 max pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBlock {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pool: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    /// Hidden layer widths; the input and output widths come from the model.
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
    },
    SmallConv {
        blocks: Vec<ConvBlock>,
        /// Optional hidden dense layer before the classifier.
        classifier_width: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Per-sample input shape: `[features]` for MLPs, `[c, h, w]` for conv nets.
    pub input_shape: Vec<usize>,
    pub arch: Architecture,
    pub num_classes: usize,
}

/// A compiled layer with all extents resolved.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layer {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Conv {
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        in_h: usize,
        in_w: usize,
        out_h: usize,
        out_w: usize,
    },
    Act(Activation),
    MaxPool {
        channels: usize,
        in_h: usize,
        in_w: usize,
    },
}

impl ModelSpec {
    pub fn mlp(inputs: usize, hidden: &[usize], num_classes: usize, activation: Activation) -> Self {
        ModelSpec {
            input_shape: vec![inputs],
            arch: Architecture::Mlp {
                hidden: hidden.to_vec(),
                activation,
            },
            num_classes,
        }
    }

    pub fn small_conv(
        input_shape: [usize; 3],
        blocks: &[ConvBlock],
        classifier_width: Option<usize>,
        num_classes: usize,
    ) -> Self {
        ModelSpec {
            input_shape: input_shape.to_vec(),
            arch: Architecture::SmallConv {
                blocks: blocks.to_vec(),
                classifier_width,
            },
            num_classes,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub(crate) fn compile(&self) -> Result<Vec<Layer>> {
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(Error::Config(format!(
                "invalid input shape {:?}",
                self.input_shape
            )));
        }
        let mut layers = Vec::new();
        match &self.arch {
            Architecture::Mlp { hidden, activation } => {
                let mut width = self.input_len();
                for &h in hidden {
                    if h == 0 {
                        return Err(Error::Config("zero-width hidden layer".into()));
                    }
                    layers.push(Layer::Dense {
                        inputs: width,
                        outputs: h,
                    });
                    layers.push(Layer::Act(*activation));
                    width = h;
                }
                layers.push(Layer::Dense {
                    inputs: width,
                    outputs: self.num_classes,
                });
            }
            Architecture::SmallConv {
                blocks,
                classifier_width,
            } => {
                if self.input_shape.len() != 3 {
                    return Err(Error::Config(format!(
                        "conv net needs a [c, h, w] input, got {:?}",
                        self.input_shape
                    )));
                }
                if blocks.is_empty() {
                    return Err(Error::Config("conv net needs at least one block".into()));
                }
                let (mut c, mut h, mut w) = (self.input_shape[0], self.input_shape[1], self.input_shape[2]);
                for b in blocks {
                    if b.channels == 0 || b.kernel == 0 || b.stride == 0 {
                        return Err(Error::Config(format!("invalid conv block {b:?}")));
                    }
                    let pad = b.kernel / 2;
                    if h + 2 * pad < b.kernel || w + 2 * pad < b.kernel {
                        return Err(Error::Config(format!(
                            "kernel {} larger than padded input {h}x{w}",
                            b.kernel
                        )));
                    }
                    let out_h = (h + 2 * pad - b.kernel) / b.stride + 1;
                    let out_w = (w + 2 * pad - b.kernel) / b.stride + 1;
                    layers.push(Layer::Conv {
                        in_c: c,
                        out_c: b.channels,
                        kernel: b.kernel,
                        stride: b.stride,
                        pad,
                        in_h: h,
                        in_w: w,
                        out_h,
                        out_w,
                    });
                    layers.push(Layer::Act(Activation::Relu));
                    c = b.channels;
                    h = out_h;
                    w = out_w;
                    if b.pool {
                        if h < 2 || w < 2 {
                            return Err(Error::Config(format!("cannot pool a {h}x{w} map")));
                        }
                        layers.push(Layer::MaxPool {
                            channels: c,
                            in_h: h,
                            in_w: w,
                        });
                        h /= 2;
                        w /= 2;
                    }
                }
                let mut width = c * h * w;
                if let Some(hidden) = classifier_width {
                    layers.push(Layer::Dense {
                        inputs: width,
                        outputs: *hidden,
                    });
                    layers.push(Layer::Act(Activation::Relu));
                    width = *hidden;
                }
                layers.push(Layer::Dense {
                    inputs: width,
                    outputs: self.num_classes,
                });
            }
        }
        Ok(layers)
    }
}
