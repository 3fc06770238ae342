use ordlab_core::data::split_indices;
use ordlab_core::nn::{Activation, Checkpoint, ModelSpec, Network, OptimizerState};
use ordlab_core::rng;
use ordlab_core::sumaug::{gcc, mix_batch_average, mix_batch_weighted};
use ordlab_core::Tensor;
use proptest::prelude::*;

fn batch_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<usize>)> {
    (prop::sample::select(vec![4usize, 8, 16, 128]), 1usize..6).prop_flat_map(|(m, d)| {
        let ks: Vec<usize> = (1..=m).filter(|k| m % k == 0).collect();
        (
            prop::sample::select(ks),
            Just(d),
            prop::collection::vec(-10.0f64..10.0, m * d),
            prop::collection::vec(0usize..5, m),
        )
    })
}

proptest! {
    #[test]
    fn gcc_is_a_distribution(n in 1usize..20, t in 0.0f64..=1.0) {
        let c = gcc(n, t).unwrap();
        let sum: f64 = c.coefficients.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(c.coefficients.iter().all(|&x| x >= 0.0));
        prop_assert_eq!(c.coefficients.len(), n);
        let zeros = c.coefficients.iter().rev().take_while(|&&x| x == 0.0).count();
        prop_assert!(zeros >= c.k);
    }

    #[test]
    fn average_mix_matches_group_mean((k, d, x, labels) in batch_strategy()) {
        let m = labels.len();
        let batch = Tensor::from_vec(&[m, d], x.clone()).unwrap();
        let mixed = mix_batch_average(&batch, &labels, k, 5).unwrap();
        let rows = m / k;
        prop_assert_eq!(mixed.inputs.shape(), &[rows, d][..]);
        for i in 0..rows {
            for f in 0..d {
                let mean = (0..k).map(|j| x[(i + j * rows) * d + f]).sum::<f64>() / k as f64;
                prop_assert!((mixed.inputs.row(i)[f] - mean).abs() <= 1e-12);
            }
            let t: f64 = mixed.soft_targets.row(i).iter().sum();
            prop_assert!((t - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn weighted_mix_at_uniform_start_is_average((k, d, x, labels) in batch_strategy()) {
        let m = labels.len();
        let batch = Tensor::from_vec(&[m, d], x).unwrap();
        let avg = mix_batch_average(&batch, &labels, k, 5).unwrap();
        let w = mix_batch_weighted(&batch, &labels, &gcc(k, 0.0).unwrap().coefficients, 5).unwrap();
        prop_assert_eq!(avg, w);
    }

    #[test]
    fn splits_partition_the_index_set(n in 1usize..300, b in 1usize..40, seed: u64) {
        let batches = split_indices(n, b, seed, false).unwrap();
        let mut all: Vec<usize> = batches.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(batches.iter().all(|x| x.len() <= b));
        prop_assert_eq!(batches.len(), n.div_ceil(b));
    }

    #[test]
    fn checkpoints_round_trip(seed: u64, step in 0u64..1000, h in 1usize..6) {
        let spec = ModelSpec::mlp(3, &[h], 2, Activation::Relu);
        let mut g = rng::stream(seed, &[]);
        let net = Network::<f32>::init(&spec, &mut g).unwrap();
        let opt = OptimizerState::new(net.params(), 0.1, 0.9, 1e-4, true).unwrap();
        let ck = Checkpoint::snapshot(&net, &opt, &g, step, 2);
        let bytes = ck.encode();
        prop_assert_eq!(Checkpoint::<f32>::decode(&bytes).unwrap().encode(), bytes);
    }
}
