use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Where sum-group mixing weights come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSource {
    /// `1/K` each.
    Average,
    /// Independent `Beta(α, α)` draws, normalized.
    Beta(f64),
    /// Independent `U(0, 1)` draws, normalized.
    Uniform,
}

pub fn sample_coefficients(k: usize, source: CoefficientSource, rng: &mut Rng) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one coefficient".into()));
    }
    let raw: Vec<f64> = match source {
        CoefficientSource::Average => return Ok(vec![1.0 / k as f64; k]),
        CoefficientSource::Beta(alpha) => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidInput(format!("beta α = {alpha} must be positive")));
            }
            let beta =
                Beta::new(alpha, alpha).map_err(|e| Error::InvalidInput(format!("beta α = {alpha}: {e}")))?;
            (0..k).map(|_| beta.sample(rng)).collect()
        }
        CoefficientSource::Uniform => (0..k).map(|_| rng.random::<f64>()).collect(),
    };
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Ok(vec![1.0 / k as f64; k]);
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn average_is_uniform() {
        let c = sample_coefficients(4, CoefficientSource::Average, &mut stream(0, &[])).unwrap();
        assert_eq!(c, [0.25; 4]);
    }

    #[test]
    fn beta_is_normalized_and_seeded() {
        for seed in 0..50 {
            let a = sample_coefficients(5, CoefficientSource::Beta(0.4), &mut stream(seed, &[])).unwrap();
            let b = sample_coefficients(5, CoefficientSource::Beta(0.4), &mut stream(seed, &[])).unwrap();
            assert_eq!(a, b);
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(a.iter().all(|&v| v >= 0.0));
        }
        let u = sample_coefficients(3, CoefficientSource::Uniform, &mut stream(1, &[])).unwrap();
        assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_alpha() {
        let mut g = stream(0, &[]);
        assert!(sample_coefficients(2, CoefficientSource::Beta(0.0), &mut g).is_err());
        assert!(sample_coefficients(2, CoefficientSource::Beta(f64::NAN), &mut g).is_err());
    }
}
