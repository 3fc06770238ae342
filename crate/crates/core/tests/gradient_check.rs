//! Analytic gradients against central finite differences, 64-bit.

use ordlab_core::nn::{mixed_bce_loss, softmax_cross_entropy, Activation, ConvBlock, ModelSpec, Network};
use ordlab_core::rng;
use ordlab_core::Tensor;
use rand::Rng as _;

const H: f64 = 1e-6;
const TOL: f64 = 1e-5;
// Gradients smaller than this are compared absolutely.
const FLOOR: f64 = 1e-4;

#[derive(Clone, Copy)]
enum Loss {
    CrossEntropy,
    Bce,
}

fn loss_value(net: &Network<f64>, x: &Tensor<f64>, labels: &[usize], soft: &Tensor<f64>, loss: Loss) -> f64 {
    let logits = net.forward(x).unwrap();
    match loss {
        Loss::CrossEntropy => softmax_cross_entropy(&logits, labels).unwrap().loss,
        Loss::Bce => mixed_bce_loss(&logits, soft, 2).unwrap().loss,
    }
}

fn check(spec: &ModelSpec, seed: u64, loss: Loss) -> f64 {
    let mut g = rng::stream(seed, &[77]);
    let mut net = Network::<f64>::init(spec, &mut g).unwrap();
    let m = 3;
    let mut shape = vec![m];
    shape.extend_from_slice(&spec.input_shape);
    let len: usize = shape.iter().product();
    let x = Tensor::from_vec(&shape, (0..len).map(|_| g.random_range(-1.0..1.0)).collect()).unwrap();
    let c = spec.num_classes;
    let labels: Vec<usize> = (0..m).map(|_| g.random_range(0..c)).collect();
    let soft_data: Vec<f64> = (0..m * c).map(|_| g.random_range(0.0..1.0)).collect();
    let soft = Tensor::from_vec(&[m, c], soft_data).unwrap();

    let logits = net.forward_train(&x).unwrap();
    let out = match loss {
        Loss::CrossEntropy => softmax_cross_entropy(&logits, &labels).unwrap(),
        Loss::Bce => mixed_bce_loss(&logits, &soft, 2).unwrap(),
    };
    let analytic = net.backward(&out.grad).unwrap().params;

    let mut worst: f64 = 0.0;
    for p in 0..analytic.len() {
        for i in 0..analytic[p].len() {
            let orig = net.params()[p].data()[i];
            net.params_mut()[p].data_mut()[i] = orig + H;
            let up = loss_value(&net, &x, &labels, &soft, loss);
            net.params_mut()[p].data_mut()[i] = orig - H;
            let down = loss_value(&net, &x, &labels, &soft, loss);
            net.params_mut()[p].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * H);
            let a = analytic[p].data()[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(err);
        }
    }
    worst
}

fn specs() -> Vec<ModelSpec> {
    vec![
        ModelSpec::mlp(2, &[8], 3, Activation::Tanh),
        ModelSpec::small_conv(
            [2, 6, 6],
            &[ConvBlock {
                channels: 3,
                kernel: 3,
                stride: 1,
                pool: true,
            }],
            None,
            3,
        ),
    ]
}

#[test]
fn gradients_match_finite_differences_over_100_seeds() {
    for spec in specs() {
        for loss in [Loss::CrossEntropy, Loss::Bce] {
            for seed in 0..100 {
                let worst = check(&spec, seed, loss);
                assert!(worst < TOL, "{spec:?} seed {seed}: relative error {worst:e}");
            }
        }
    }
}

#[test]
fn relu_mlp_matches_finite_differences() {
    let spec = ModelSpec::mlp(2, &[8], 3, Activation::Relu);
    for seed in 0..100 {
        let worst = check(&spec, seed, Loss::CrossEntropy);
        assert!(worst < TOL, "seed {seed}: relative error {worst:e}");
    }
}
