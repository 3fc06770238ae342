//! Explorer clustering against a separately written brute-force Lloyd's.

use ordlab_core::explorer::kmeans_select_by_test_loss;
use ordlab_core::rng;
use rand::Rng as _;

/// Straightforward Lloyd's with the same farthest-point start: the first
/// centroid is the loss at a seeded random position, each further one is
/// the first loss farthest from every chosen centroid.
fn oracle(losses: &[f64], clusters: usize, seed: u64) -> Vec<usize> {
    let mut g = rng::stream(seed, &[]);
    let mut cents = vec![losses[g.random_range(0..losses.len())]];
    while cents.len() < clusters {
        let dist = |x: f64| cents.iter().map(|c| (x - c).abs()).fold(f64::INFINITY, f64::min);
        let mut best = 0;
        for i in 1..losses.len() {
            if dist(losses[i]) > dist(losses[best]) {
                best = i;
            }
        }
        cents.push(losses[best]);
    }
    let assign = |cents: &[f64], x: f64| {
        (0..cents.len())
            .min_by(|&a, &b| {
                (x - cents[a])
                    .abs()
                    .total_cmp(&(x - cents[b]).abs())
                    .then(a.cmp(&b))
            })
            .unwrap()
    };
    for _ in 0..100 {
        let mut next = cents.clone();
        for (c, slot) in next.iter_mut().enumerate() {
            let members: Vec<f64> = losses
                .iter()
                .copied()
                .filter(|&x| assign(&cents, x) == c)
                .collect();
            if !members.is_empty() {
                *slot = members.iter().sum::<f64>() / members.len() as f64;
            }
        }
        let shift = next
            .iter()
            .zip(&cents)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        cents = next;
        if shift <= 1e-12 {
            break;
        }
    }
    let mut reps: Vec<usize> = (0..clusters)
        .filter_map(|c| {
            (0..losses.len())
                .filter(|&i| assign(&cents, losses[i]) == c)
                .min_by(|&a, &b| {
                    (losses[a] - cents[c])
                        .abs()
                        .total_cmp(&(losses[b] - cents[c]).abs())
                        .then(a.cmp(&b))
                })
        })
        .collect();
    reps.sort_unstable();
    reps
}

#[test]
fn evenly_spaced_losses() {
    let losses: Vec<f64> = (1..=24).map(f64::from).collect();
    for seed in 0..20 {
        let got = kmeans_select_by_test_loss(&losses, 12, seed);
        assert_eq!(got.len(), 12);
        assert_eq!(got, oracle(&losses, 12, seed), "seed {seed}");
    }
}

#[test]
fn random_losses() {
    let mut g = rng::stream(42, &[]);
    for trial in 0..200 {
        let n = g.random_range(13..200);
        let losses: Vec<f64> = (0..n).map(|_| g.random_range(0.0..3.0)).collect();
        let clusters = g.random_range(1..13);
        assert_eq!(
            kmeans_select_by_test_loss(&losses, clusters, trial),
            oracle(&losses, clusters, trial),
            "trial {trial}"
        );
    }
}
