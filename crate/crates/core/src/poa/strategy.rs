use alloc::format;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::{ScoreRecord, StrategyKind};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Uniform draw of κ item ids from the pool, without replacement.
pub fn select_candidates(pool: &[usize], count: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if count == 0 || count > pool.len() {
        return Err(Error::State(format!(
            "cannot select {count} candidates from a pool of {}",
            pool.len()
        )));
    }
    Ok(rng::pick_distinct(pool.len(), count, rng)
        .into_iter()
        .map(|p| pool[p])
        .collect())
}

/// Lowest (ascending) or highest (descending) score; ties go to the lowest
/// item id.
pub fn order_next(scores: &[ScoreRecord], strategy: StrategyKind) -> Result<usize> {
    let descending = match strategy {
        StrategyKind::OrderAscending => false,
        StrategyKind::OrderDescending => true,
        other => return Err(Error::Config(format!("{other:?} is not an ordering strategy"))),
    };
    let better = |a: &ScoreRecord, b: &ScoreRecord| {
        let by_score = if descending {
            b.score.total_cmp(&a.score)
        } else {
            a.score.total_cmp(&b.score)
        };
        by_score.then(a.item.cmp(&b.item))
    };
    scores
        .iter()
        .min_by(|a, b| better(a, b))
        .map(|r| r.item)
        .ok_or_else(|| Error::State("no scored items to order".into()))
}

/// Draws `count` item ids with replacement, `p ∝ s + ε` (direct) or
/// `p ∝ 1 / (s + ε)` (inverse). Records are weighted in item-id order.
pub fn sample_batch(
    scores: &[ScoreRecord],
    strategy: StrategyKind,
    epsilon: f64,
    rng: &mut Rng,
    count: usize,
) -> Result<Vec<usize>> {
    let inverse = match strategy {
        StrategyKind::SampleWeightedDirect => false,
        StrategyKind::SampleWeightedInverse => true,
        other => return Err(Error::Config(format!("{other:?} is not a sampling strategy"))),
    };
    if scores.is_empty() {
        return Err(Error::State("no scored items to sample".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by_key(|r| r.item);
    let mut weights = Vec::with_capacity(sorted.len());
    for r in &sorted {
        if r.score < 0.0 || !r.score.is_finite() {
            return Err(Error::DegenerateScore(format!(
                "item {} has score {}, weighting needs nonnegative scores",
                r.item, r.score
            )));
        }
        let w = r.score + epsilon;
        weights.push(if inverse { 1.0 / w } else { w });
    }
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::DegenerateScore(format!("score weights rejected: {e}")))?;
    Ok((0..count).map(|_| sorted[dist.sample(rng)].item).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(item: usize, score: f64) -> ScoreRecord {
        ScoreRecord {
            item,
            score,
            scored_at_step: 0,
        }
    }

    #[test]
    fn ordering_examples() {
        let s = [rec(0, 0.3), rec(1, 0.1), rec(2, 0.7)];
        assert_eq!(order_next(&s, StrategyKind::OrderAscending).unwrap(), 1);
        assert_eq!(order_next(&s, StrategyKind::OrderDescending).unwrap(), 2);
        let tie = [rec(4, 0.5), rec(2, 0.5)];
        assert_eq!(order_next(&tie, StrategyKind::OrderAscending).unwrap(), 2);
        assert_eq!(order_next(&tie, StrategyKind::OrderDescending).unwrap(), 2);
        assert!(order_next(&[], StrategyKind::OrderAscending).is_err());
    }

    #[test]
    fn candidate_selection() {
        let pool: Vec<usize> = (0..391).collect();
        let mut g = rng::stream(1, &[]);
        let mut c = select_candidates(&pool, 8, &mut g).unwrap();
        c.sort_unstable();
        c.dedup();
        assert_eq!(c.len(), 8);
        let mut all = select_candidates(&pool[..5], 5, &mut g).unwrap();
        all.sort_unstable();
        assert_eq!(all, [0, 1, 2, 3, 4]);
        assert!(select_candidates(&pool[..2], 3, &mut g).is_err());
        let a = select_candidates(&pool, 8, &mut rng::stream(9, &[])).unwrap();
        let b = select_candidates(&pool, 8, &mut rng::stream(9, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_limits() {
        let mut g = rng::stream(2, &[]);
        let s = [rec(0, 0.0), rec(1, 1.0)];
        let draws = sample_batch(
            &s,
            StrategyKind::SampleWeightedDirect,
            DEFAULT_EPSILON,
            &mut g,
            1000,
        )
        .unwrap();
        assert!(draws.iter().all(|&d| d == 1));
        let inv = sample_batch(
            &s,
            StrategyKind::SampleWeightedInverse,
            DEFAULT_EPSILON,
            &mut g,
            1000,
        )
        .unwrap();
        assert!(inv.iter().all(|&d| d == 0));
        let one = sample_batch(
            &[rec(7, 3.0)],
            StrategyKind::SampleWeightedInverse,
            1e-8,
            &mut g,
            5,
        )
        .unwrap();
        assert_eq!(one, [7; 5]);
        assert!(sample_batch(
            &[rec(0, -1.0)],
            StrategyKind::SampleWeightedDirect,
            1e-8,
            &mut g,
            1
        )
        .is_err());
    }
}
