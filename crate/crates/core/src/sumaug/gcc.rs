//! Gradually cascading coefficients.
//!
//! For a start group count `n` and progress `t ∈ [0, 1]`:
//!
//! ```text
//! k         = ⌊t·(n−1)⌋
//! centroid  = 1/(n−k) + (t·(n−1) − k) / ((n−k)(n−k−1))
//! remainer  = 1 − centroid·(n−k−1)
//! eps       = remainer · (t − k/(n−1)) / (n−1)
//! GCC_n(t)  = (centroid + eps/(n−k−1)  [n−k−1 times], remainer − eps, 0 [k times])
//! ```
//!
//! `remainer` is evaluated as `(1 − s)/(n−k)` with `s = t·(n−1) − k`, the
//! same quantity without the cancellation, so `t = 0` yields exactly
//! `1/n` everywhere. When only one group is left (`n − k = 1`, which
//! includes `t = 1`) the formulas divide by zero and the vector is the
//! one-hot `(1, 0, …, 0)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub n: usize,
    pub t: f64,
    /// Number of groups already retired, `⌊t·(n−1)⌋`.
    pub k: usize,
    pub coefficients: Vec<f64>,
}

impl CoefficientVector {
    /// Groups still contributing, i.e. the current `K`.
    pub fn active(&self) -> usize {
        self.n - self.k
    }

    /// `1 / Σ c²`: equals `K` for an equal average over `K` groups and 1 for
    /// a single group, and moves continuously with `t` in between.
    pub fn effective_groups(&self) -> f64 {
        1.0 / self.coefficients.iter().map(|c| c * c).sum::<f64>()
    }
}

pub fn gcc(n: usize, t: f64) -> Result<CoefficientVector> {
    if n == 0 {
        return Err(Error::InvalidInput("gcc needs n ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    let span = (n - 1) as f64;
    let k = if n == 1 {
        0
    } else {
        (num_traits::Float::floor(t * span) as usize).min(n - 1)
    };
    let live = n - k;
    let mut coefficients = vec![0.0; n];
    if live == 1 {
        coefficients[0] = 1.0;
        return Ok(CoefficientVector {
            n,
            t,
            k,
            coefficients,
        });
    }
    let (nk, nk1) = (live as f64, (live - 1) as f64);
    let s = t * span - k as f64;
    let centroid = 1.0 / nk + s / (nk * nk1);
    let remainer = (1.0 - s) / nk;
    let eps = remainer * (t - k as f64 / span) / span;
    let raised = centroid + eps / nk1;
    for c in coefficients.iter_mut().take(live - 1) {
        *c = raised;
    }
    coefficients[live - 1] = remainer - eps;
    Ok(CoefficientVector {
        n,
        t,
        k,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_groups_span_n_to_one() {
        assert_eq!(gcc(4, 0.0).unwrap().effective_groups(), 4.0);
        assert_eq!(gcc(4, 1.0).unwrap().effective_groups(), 1.0);
        let mut last = 4.0;
        for i in 1..=100 {
            let e = gcc(4, i as f64 / 100.0).unwrap().effective_groups();
            assert!(e <= last + 1e-12 && e >= 1.0);
            last = e;
        }
    }

    #[test]
    fn two_groups_start_equal() {
        assert_eq!(gcc(2, 0.0).unwrap().coefficients, [0.5, 0.5]);
    }

    #[test]
    fn two_groups_half_way() {
        // k = 0, centroid = 0.75, remainer = 0.25, eps = 0.125
        assert_eq!(gcc(2, 0.5).unwrap().coefficients, [0.875, 0.125]);
    }

    #[test]
    fn endpoint_is_one_hot() {
        let c = gcc(4, 1.0).unwrap();
        assert_eq!(c.coefficients, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.k, 3);
        assert_eq!(gcc(1, 0.3).unwrap().coefficients, [1.0]);
    }

    #[test]
    fn uniform_start_is_exact() {
        for n in 1..=16 {
            let c = gcc(n, 0.0).unwrap();
            assert!(c.coefficients.iter().all(|&v| v == 1.0 / n as f64), "n = {n}");
        }
    }

    #[test]
    fn rejects_out_of_range_t() {
        assert!(gcc(3, -0.1).is_err());
        assert!(gcc(3, 1.0001).is_err());
        assert!(gcc(3, f64::NAN).is_err());
        assert!(gcc(0, 0.5).is_err());
    }
}
