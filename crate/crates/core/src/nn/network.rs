use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng as _;

use super::spec::{Activation, Layer, ModelSpec};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Values recorded by a training forward pass.
#[derive(Debug, Clone)]
struct Tape<S> {
    version: u64,
    batch: usize,
    /// Input of every layer, in layer order.
    inputs: Vec<Vec<S>>,
    /// Winning flat input offset of every pooled output, per pool layer.
    pool_argmax: Vec<Vec<usize>>,
}

/// Gradients from one backward pass.
#[derive(Debug, Clone)]
pub struct Gradients<S> {
    /// One tensor per parameter, in parameter order.
    pub params: Vec<Tensor<S>>,
    /// Gradient with respect to the batch fed to the forward pass.
    pub input: Tensor<S>,
}

/// A compiled model and its parameters.
///
/// Parameters are stored as `[weight, bias]` pairs per dense/conv layer.
/// Dense weights are `[outputs, inputs]`, conv weights are
/// `[out_c, in_c, k, k]`. Clones are fully independent.
#[derive(Debug, Clone)]
pub struct Network<S> {
    spec: ModelSpec,
    layers: Vec<Layer>,
    params: Vec<Tensor<S>>,
    version: u64,
    tape: Option<Tape<S>>,
}

impl<S: Real> Network<S> {
    /// Zero biases, weights uniform in `±sqrt(6 / fan_in)` (ReLU nets) or
    /// `±sqrt(3 / fan_in)` (tanh MLPs and the output layer). Drawn in f64
    /// so both precisions start from the same values.
    pub fn init(spec: &ModelSpec, rng: &mut Rng) -> Result<Self> {
        let layers = spec.compile()?;
        let gain = match spec.arch {
            super::Architecture::Mlp {
                activation: Activation::Tanh,
                ..
            } => 3.0,
            _ => 6.0,
        };
        let last = layers.iter().rposition(|l| matches!(l, Layer::Dense { .. }));
        let mut params = Vec::new();
        for (li, layer) in layers.iter().enumerate() {
            let (wshape, fan_in, bias) = match *layer {
                Layer::Dense { inputs, outputs } => (vec![outputs, inputs], inputs, outputs),
                Layer::Conv {
                    in_c, out_c, kernel, ..
                } => (vec![out_c, in_c, kernel, kernel], in_c * kernel * kernel, out_c),
                _ => continue,
            };
            let g = if Some(li) == last { 3.0 } else { gain };
            let bound = Float::sqrt(g / fan_in as f64);
            let n: usize = wshape.iter().product();
            let w: Vec<S> = (0..n).map(|_| S::of(rng.random_range(-bound..bound))).collect();
            params.push(Tensor::from_vec(&wshape, w)?);
            params.push(Tensor::zeros(&[bias]));
        }
        Ok(Network {
            spec: spec.clone(),
            layers,
            params,
            version: 0,
            tape: None,
        })
    }

    /// All parameters set to zero.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        let mut rng = crate::rng::stream(0, &[]);
        let mut net = Self::init(spec, &mut rng)?;
        for p in net.params.iter_mut() {
            p.data_mut().iter_mut().for_each(|v| *v = S::zero());
        }
        Ok(net)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Tensor<S>] {
        &self.params
    }

    /// Mutable parameter access. Invalidates any recorded forward pass.
    pub fn params_mut(&mut self) -> &mut [Tensor<S>] {
        self.version += 1;
        &mut self.params
    }

    pub fn set_params(&mut self, params: Vec<Tensor<S>>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameter tensors, got {}",
                self.params.len(),
                params.len()
            )));
        }
        for (a, b) in self.params.iter().zip(&params) {
            a.check_same_shape(b)?;
        }
        self.params = params;
        self.version += 1;
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    fn check_input(&self, batch: &Tensor<S>) -> Result<usize> {
        let shape = batch.shape();
        if shape.len() != self.spec.input_shape.len() + 1 || shape[1..] != self.spec.input_shape[..] {
            return Err(Error::InvalidInput(format!(
                "batch shape {shape:?} does not match model input {:?}",
                self.spec.input_shape
            )));
        }
        Ok(shape[0])
    }

    /// Logits `[m, num_classes]` for a batch `[m, input_shape...]`.
    pub fn forward(&self, batch: &Tensor<S>) -> Result<Tensor<S>> {
        let m = self.check_input(batch)?;
        let mut x = batch.data().to_vec();
        let mut p = 0;
        for layer in &self.layers {
            x = apply_layer(layer, &self.params, &mut p, &x, m, None);
        }
        Tensor::from_vec(&[m, self.spec.num_classes], x)
    }

    /// Forward pass that records what `backward` needs.
    pub fn forward_train(&mut self, batch: &Tensor<S>) -> Result<Tensor<S>> {
        let m = self.check_input(batch)?;
        let mut x = batch.data().to_vec();
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pool_argmax = Vec::new();
        let mut p = 0;
        for layer in &self.layers {
            let mut argmax = Vec::new();
            let is_pool = matches!(layer, Layer::MaxPool { .. });
            let y = apply_layer(
                layer,
                &self.params,
                &mut p,
                &x,
                m,
                if is_pool { Some(&mut argmax) } else { None },
            );
            if is_pool {
                pool_argmax.push(argmax);
            }
            inputs.push(x);
            x = y;
        }
        self.tape = Some(Tape {
            version: self.version,
            batch: m,
            inputs,
            pool_argmax,
        });
        Tensor::from_vec(&[m, self.spec.num_classes], x)
    }

    /// Reverse pass from the gradient of the loss with respect to the logits
    /// of the last `forward_train`. The recorded pass is consumed.
    pub fn backward(&mut self, grad_logits: &Tensor<S>) -> Result<Gradients<S>> {
        let tape = self
            .tape
            .take()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        if tape.version != self.version {
            return Err(Error::State(
                "parameters changed since the recorded forward pass".into(),
            ));
        }
        let m = tape.batch;
        if grad_logits.shape() != [m, self.spec.num_classes] {
            return Err(Error::Shape(format!(
                "logit gradient {:?} does not match [{m}, {}]",
                grad_logits.shape(),
                self.spec.num_classes
            )));
        }
        let mut grads: Vec<Tensor<S>> = self.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        let mut g = grad_logits.data().to_vec();
        let mut p = self.params.len();
        let mut pool = tape.pool_argmax.len();
        for (layer, input) in self.layers.iter().zip(&tape.inputs).rev() {
            g = match *layer {
                Layer::Dense { inputs, outputs } => {
                    p -= 2;
                    let w = self.params[p].data();
                    let (gw, rest) = grads[p..].split_at_mut(1);
                    let gw = gw[0].data_mut();
                    let gb = rest[0].data_mut();
                    let mut gx = vec![S::zero(); m * inputs];
                    for n in 0..m {
                        let x = &input[n * inputs..(n + 1) * inputs];
                        let go = &g[n * outputs..(n + 1) * outputs];
                        let gxr = &mut gx[n * inputs..(n + 1) * inputs];
                        for o in 0..outputs {
                            let d = go[o];
                            gb[o] = gb[o] + d;
                            let wr = &w[o * inputs..(o + 1) * inputs];
                            let gwr = &mut gw[o * inputs..(o + 1) * inputs];
                            for i in 0..inputs {
                                gwr[i] = gwr[i] + d * x[i];
                                gxr[i] = gxr[i] + d * wr[i];
                            }
                        }
                    }
                    gx
                }
                Layer::Conv {
                    in_c,
                    out_c,
                    kernel,
                    stride,
                    pad,
                    in_h,
                    in_w,
                    out_h,
                    out_w,
                } => {
                    p -= 2;
                    let w = self.params[p].data();
                    let (gw, rest) = grads[p..].split_at_mut(1);
                    let gw = gw[0].data_mut();
                    let gb = rest[0].data_mut();
                    let in_plane = in_h * in_w;
                    let out_plane = out_h * out_w;
                    let mut gx = vec![S::zero(); m * in_c * in_plane];
                    for n in 0..m {
                        for oc in 0..out_c {
                            let go = &g[(n * out_c + oc) * out_plane..][..out_plane];
                            gb[oc] = gb[oc] + go.iter().copied().sum::<S>();
                            for ic in 0..in_c {
                                let xin = &input[(n * in_c + ic) * in_plane..][..in_plane];
                                let gxin = &mut gx[(n * in_c + ic) * in_plane..][..in_plane];
                                for ky in 0..kernel {
                                    for kx in 0..kernel {
                                        let widx = ((oc * in_c + ic) * kernel + ky) * kernel + kx;
                                        let wv = w[widx];
                                        let mut acc = S::zero();
                                        for oy in 0..out_h {
                                            let iy = (oy * stride + ky) as isize - pad as isize;
                                            if iy < 0 || iy >= in_h as isize {
                                                continue;
                                            }
                                            let iy = iy as usize;
                                            for ox in 0..out_w {
                                                let ix = (ox * stride + kx) as isize - pad as isize;
                                                if ix < 0 || ix >= in_w as isize {
                                                    continue;
                                                }
                                                let ii = iy * in_w + ix as usize;
                                                let d = go[oy * out_w + ox];
                                                acc = acc + d * xin[ii];
                                                gxin[ii] = gxin[ii] + d * wv;
                                            }
                                        }
                                        gw[widx] = gw[widx] + acc;
                                    }
                                }
                            }
                        }
                    }
                    gx
                }
                Layer::Act(act) => {
                    // `input` is the pre-activation.
                    input
                        .iter()
                        .zip(&g)
                        .map(|(&z, &d)| match act {
                            Activation::Relu => {
                                if z > S::zero() {
                                    d
                                } else {
                                    S::zero()
                                }
                            }
                            Activation::Tanh => {
                                let t = z.tanh();
                                d * (S::one() - t * t)
                            }
                        })
                        .collect()
                }
                Layer::MaxPool { .. } => {
                    pool -= 1;
                    let mut gx = vec![S::zero(); input.len()];
                    for (&src, &d) in tape.pool_argmax[pool].iter().zip(&g) {
                        gx[src] = gx[src] + d;
                    }
                    gx
                }
            };
        }
        let mut input_shape = vec![m];
        input_shape.extend_from_slice(&self.spec.input_shape);
        Ok(Gradients {
            params: grads,
            input: Tensor::from_vec(&input_shape, g)?,
        })
    }

    /// Clears any recorded forward pass.
    pub fn clear_tape(&mut self) {
        self.tape = None;
    }
}

fn apply_layer<S: Real>(
    layer: &Layer,
    params: &[Tensor<S>],
    p: &mut usize,
    x: &[S],
    m: usize,
    argmax: Option<&mut Vec<usize>>,
) -> Vec<S> {
    match *layer {
        Layer::Dense { inputs, outputs } => {
            let w = params[*p].data();
            let b = params[*p + 1].data();
            *p += 2;
            let mut y = vec![S::zero(); m * outputs];
            for n in 0..m {
                let xr = &x[n * inputs..(n + 1) * inputs];
                for o in 0..outputs {
                    let wr = &w[o * inputs..(o + 1) * inputs];
                    let mut acc = b[o];
                    for i in 0..inputs {
                        acc = acc + wr[i] * xr[i];
                    }
                    y[n * outputs + o] = acc;
                }
            }
            y
        }
        Layer::Conv {
            in_c,
            out_c,
            kernel,
            stride,
            pad,
            in_h,
            in_w,
            out_h,
            out_w,
        } => {
            let w = params[*p].data();
            let b = params[*p + 1].data();
            *p += 2;
            let in_plane = in_h * in_w;
            let out_plane = out_h * out_w;
            let mut y = vec![S::zero(); m * out_c * out_plane];
            for n in 0..m {
                for oc in 0..out_c {
                    let yo = &mut y[(n * out_c + oc) * out_plane..][..out_plane];
                    yo.iter_mut().for_each(|v| *v = b[oc]);
                    for ic in 0..in_c {
                        let xin = &x[(n * in_c + ic) * in_plane..][..in_plane];
                        for ky in 0..kernel {
                            for kx in 0..kernel {
                                let wv = w[((oc * in_c + ic) * kernel + ky) * kernel + kx];
                                for oy in 0..out_h {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    if iy < 0 || iy >= in_h as isize {
                                        continue;
                                    }
                                    let row = &xin[iy as usize * in_w..][..in_w];
                                    let yrow = &mut yo[oy * out_w..][..out_w];
                                    for ox in 0..out_w {
                                        let ix = (ox * stride + kx) as isize - pad as isize;
                                        if ix < 0 || ix >= in_w as isize {
                                            continue;
                                        }
                                        yrow[ox] = yrow[ox] + wv * row[ix as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            y
        }
        Layer::Act(Activation::Relu) => x.iter().map(|&v| v.max(S::zero())).collect(),
        Layer::Act(Activation::Tanh) => x.iter().map(|&v| v.tanh()).collect(),
        Layer::MaxPool { channels, in_h, in_w } => {
            let (oh, ow) = (in_h / 2, in_w / 2);
            let mut y = Vec::with_capacity(m * channels * oh * ow);
            let mut record = argmax;
            for plane in 0..m * channels {
                let base = plane * in_h * in_w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = base + (2 * oy) * in_w + 2 * ox;
                        for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                            let idx = base + (2 * oy + dy) * in_w + 2 * ox + dx;
                            if x[idx] > x[best] {
                                best = idx;
                            }
                        }
                        y.push(x[best]);
                        if let Some(r) = record.as_deref_mut() {
                            r.push(best);
                        }
                    }
                }
            }
            y
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::spec::ConvBlock;
    use crate::rng::stream;

    #[test]
    fn zero_weight_mlp_gives_zero_logits() {
        let spec = ModelSpec::mlp(4, &[5], 3, Activation::Relu);
        let net = Network::<f64>::zeros(&spec).unwrap();
        let x = Tensor::from_f64(&[2, 4], &[1.0, -2.0, 3.0, 0.5, 9.0, 8.0, -7.0, 6.0]).unwrap();
        let y = net.forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 3]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_single_layer() {
        let spec = ModelSpec::mlp(1, &[], 1, Activation::Relu);
        let mut net = Network::<f64>::zeros(&spec).unwrap();
        net.params_mut()[0].data_mut()[0] = 1.0;
        let y = net.forward(&Tensor::from_f64(&[1, 1], &[0.3]).unwrap()).unwrap();
        assert_eq!(y.data(), &[0.3]);
    }

    #[test]
    fn forward_is_deterministic() {
        let spec = ModelSpec::mlp(2, &[8], 3, Activation::Relu);
        let net = Network::<f32>::init(&spec, &mut stream(7, &[])).unwrap();
        let x = Tensor::from_f64(&[1, 2], &[0.25, -1.5]).unwrap();
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(
            a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let spec = ModelSpec::mlp(3, &[], 2, Activation::Relu);
        let net = Network::<f64>::zeros(&spec).unwrap();
        let err = net.forward(&Tensor::zeros(&[2, 4])).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn backward_without_forward_is_a_state_error() {
        let spec = ModelSpec::mlp(3, &[], 2, Activation::Relu);
        let mut net = Network::<f64>::zeros(&spec).unwrap();
        let err = net.backward(&Tensor::zeros(&[1, 2])).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn backward_after_parameter_change_is_a_state_error() {
        let spec = ModelSpec::mlp(3, &[], 2, Activation::Relu);
        let mut net = Network::<f64>::zeros(&spec).unwrap();
        net.forward_train(&Tensor::zeros(&[1, 3])).unwrap();
        net.params_mut()[1].data_mut()[0] = 1.0;
        assert!(matches!(
            net.backward(&Tensor::zeros(&[1, 2])),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn conv_output_shape() {
        let spec = ModelSpec::small_conv(
            [3, 8, 8],
            &[
                ConvBlock {
                    channels: 4,
                    kernel: 3,
                    stride: 1,
                    pool: true,
                },
                ConvBlock {
                    channels: 6,
                    kernel: 3,
                    stride: 2,
                    pool: false,
                },
            ],
            Some(5),
            10,
        );
        let net = Network::<f32>::init(&spec, &mut stream(1, &[])).unwrap();
        let y = net.forward(&Tensor::zeros(&[2, 3, 8, 8])).unwrap();
        assert_eq!(y.shape(), &[2, 10]);
    }
}
