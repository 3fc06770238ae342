use alloc::vec::Vec;

use rand::Rng as _;

use crate::rng;

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-12;

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (c, &m) in centroids.iter().enumerate() {
        if (x - m).abs() < (x - centroids[best]).abs() {
            best = c;
        }
    }
    best
}

/// One-dimensional Lloyd's algorithm over run losses. Returns the ids of
/// the runs nearest each final centroid, ascending. With fewer distinct
/// losses than clusters, one run per distinct loss is returned.
pub fn kmeans_select_by_test_loss(losses: &[f64], clusters: usize, seed: u64) -> Vec<usize> {
    if losses.is_empty() || clusters == 0 {
        return Vec::new();
    }
    let mut distinct: Vec<(f64, usize)> = losses.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    distinct.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    distinct.dedup_by(|b, a| a.0 == b.0);
    if distinct.len() <= clusters {
        let mut ids: Vec<usize> = distinct.into_iter().map(|(_, i)| i).collect();
        ids.sort_unstable();
        return ids;
    }

    // Seeded farthest-point initialization.
    let mut g = rng::stream(seed, &[]);
    let mut centroids = alloc::vec![losses[g.random_range(0..losses.len())]];
    while centroids.len() < clusters {
        let mut far = 0;
        let mut far_d = -1.0;
        for (i, &x) in losses.iter().enumerate() {
            let d = (x - centroids[nearest(&centroids, x)]).abs();
            if d > far_d {
                far = i;
                far_d = d;
            }
        }
        centroids.push(losses[far]);
    }

    for _ in 0..MAX_ITERATIONS {
        let mut sums = alloc::vec![0.0; clusters];
        let mut counts = alloc::vec![0usize; clusters];
        for &x in losses {
            let c = nearest(&centroids, x);
            sums[c] += x;
            counts[c] += 1;
        }
        let mut shift: f64 = 0.0;
        for c in 0..clusters {
            if counts[c] > 0 {
                let m = sums[c] / counts[c] as f64;
                shift = shift.max((m - centroids[c]).abs());
                centroids[c] = m;
            }
        }
        if shift <= TOLERANCE {
            break;
        }
    }

    let mut best: Vec<Option<usize>> = alloc::vec![None; clusters];
    for (i, &x) in losses.iter().enumerate() {
        let c = nearest(&centroids, x);
        let closer = match best[c] {
            None => true,
            Some(j) => (x - centroids[c]).abs() < (losses[j] - centroids[c]).abs(),
        };
        if closer {
            best[c] = Some(i);
        }
    }
    let mut ids: Vec<usize> = best.into_iter().flatten().collect();
    ids.sort_unstable();
    ids
}
