//! Frozen values from 50-digit mpmath evaluations and other independent
//! computations.

#![allow(clippy::excessive_precision)]

use num_bigint::BigUint;
use ordlab_core::nn::{l2_norm, softmax_cross_entropy};
use ordlab_core::sumaug::{domain_size, gcc, total_domain_size};
use ordlab_core::Tensor;

#[test]
fn cross_entropy_matches_high_precision_oracle() {
    let logits = Tensor::<f64>::from_f64(
        &[3, 4],
        &[
            1.5, -0.3, 2.25, 0.0, -4.0, 8.5, 3.125, -1.0, 700.0, -700.0, 0.5, 699.5,
        ],
    )
    .unwrap();
    let out = softmax_cross_entropy(&logits, &[2, 1, 3]).unwrap();
    let mean = 0.494_362_784_840_266_5;
    assert!((out.loss - mean).abs() <= 1e-12 * mean);
    let grad_row0 = [
        0.095_090_594_376_348_98,
        0.015_718_369_530_740_336,
        -0.132_026_543_458_893_45,
        0.021_217_579_551_804_127,
    ];
    for (g, e) in out.grad.row(0).iter().zip(grad_row0) {
        assert!((g - e).abs() <= 1e-12 * e.abs());
    }
}

#[test]
fn l2_norm_matches_high_precision_oracle() {
    let p = [1.0, 0.1, 0.01, 0.001, 0.0001];
    let vals: Vec<f64> = (0..1000)
        .map(|i| ((i % 7) as f64 - 3.0) / 3.0 + p[i % 5])
        .collect();
    let a = Tensor::from_vec(&[400], vals[..400].to_vec()).unwrap();
    let b = Tensor::from_vec(&[20, 30], vals[400..].to_vec()).unwrap();
    let norm = l2_norm(&[a, b]);
    let expect = 25.376_439_681_107_53;
    assert!((norm - expect).abs() <= 1e-12 * expect);

    let mut wide: Vec<f64> = (0..1000).map(|i| 1e8 + (i % 3) as f64).collect();
    wide.extend([1e-8; 1000]);
    let norm = l2_norm(&[Tensor::from_vec(&[2000], wide).unwrap()]);
    let expect = 3_162_277_691.759_533_4;
    assert!((norm - expect).abs() <= 1e-12 * expect);
}

#[test]
fn gcc_hand_derived_values() {
    // n = 2, t = 0.5: k = 0, s = 0.5, centroid = 1/2 + 0.5/2 = 0.75,
    // remainer = 0.25, eps = 0.25 · 0.5 / 1 = 0.125.
    assert_eq!(gcc(2, 0.5).unwrap().coefficients, [0.875, 0.125]);
    assert_eq!(gcc(2, 0.0).unwrap().coefficients, [0.5, 0.5]);
    assert_eq!(gcc(2, 1.0).unwrap().coefficients, [1.0, 0.0]);
    // n = 3, t = 0.5 sits on the segment boundary: k = 1, s = 0.
    assert_eq!(gcc(3, 0.5).unwrap().coefficients, [0.5, 0.5, 0.0]);
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn domain_sizes_match_machine_integer_oracle() {
    for n in [1u64, 5, 50, 100] {
        let mut total = 0u128;
        for k in 1..=n.min(16) {
            let b = binomial_u128(n as u128, k as u128);
            assert_eq!(domain_size(n, k).unwrap(), BigUint::from(b));
            total += b;
            assert_eq!(total_domain_size(n, k).unwrap(), BigUint::from(total));
        }
    }
    assert!(domain_size(4, 5).is_err());
    assert!(domain_size(4, 0).is_err());
}
