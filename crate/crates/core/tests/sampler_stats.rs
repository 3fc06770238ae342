//! Empirical draw frequencies of the weighted sampler.

use ordlab_core::poa::{sample_batch, ScoreRecord, StrategyKind, DEFAULT_EPSILON};
use ordlab_core::rng;

fn frequencies(scores: &[f64], strategy: StrategyKind, draws: usize, seed: u64) -> Vec<usize> {
    let records: Vec<ScoreRecord> = scores
        .iter()
        .enumerate()
        .map(|(item, &score)| ScoreRecord {
            item,
            score,
            scored_at_step: 0,
        })
        .collect();
    let mut g = rng::stream(seed, &[]);
    let mut counts = vec![0; scores.len()];
    for id in sample_batch(&records, strategy, DEFAULT_EPSILON, &mut g, draws).unwrap() {
        counts[id] += 1;
    }
    counts
}

/// Pearson statistic against expected probabilities.
fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn equal_scores_draw_uniformly() {
    let n = 100_000;
    for strategy in [
        StrategyKind::SampleWeightedDirect,
        StrategyKind::SampleWeightedInverse,
    ] {
        let counts = frequencies(&[0.7; 8], strategy, n, 3);
        let e = n as f64 / 8.0;
        let sigma = (n as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        for &c in &counts {
            assert!((c as f64 - e).abs() <= 3.0 * sigma, "{counts:?}");
        }
        // 7 degrees of freedom, 0.999 quantile.
        assert!(chi_square(&counts, &[1.0 / 8.0; 8]) < 24.32);
    }
}

#[test]
fn weights_follow_scores() {
    let scores = [0.5, 1.0, 2.0, 4.0];
    let direct: Vec<f64> = scores.iter().map(|s| s + DEFAULT_EPSILON).collect();
    let inverse: Vec<f64> = direct.iter().map(|w| 1.0 / w).collect();
    for (strategy, w) in [
        (StrategyKind::SampleWeightedDirect, direct),
        (StrategyKind::SampleWeightedInverse, inverse),
    ] {
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let counts = frequencies(&scores, strategy, 100_000, 9);
        // 3 degrees of freedom, 0.999 quantile.
        assert!(chi_square(&counts, &probs) < 16.27, "{strategy:?}: {counts:?}");
    }
}
