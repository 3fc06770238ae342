use alloc::format;

use num_bigint::BigUint;

use crate::error::{Error, Result};

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn check(dataset_size: u64, k: u64) -> Result<()> {
    if k == 0 || k > dataset_size {
        return Err(Error::InvalidInput(format!(
            "group count {k} must be in 1..={dataset_size}"
        )));
    }
    Ok(())
}

/// Number of distinct K-subsets a sum group can average: `C(|D|, K)`.
pub fn domain_size(dataset_size: u64, k: u64) -> Result<BigUint> {
    check(dataset_size, k)?;
    Ok(binomial(dataset_size, k))
}

/// `Σ_{j=1..K} C(|D|, j)`: everything a cascade from `K` down to 1 can see.
pub fn total_domain_size(dataset_size: u64, k: u64) -> Result<BigUint> {
    check(dataset_size, k)?;
    let mut total = BigUint::from(0u32);
    let mut c = BigUint::from(1u32);
    for j in 1..=k {
        c = c * (dataset_size - j + 1) / j;
        total += &c;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(domain_size(4, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(total_domain_size(4, 2).unwrap(), BigUint::from(10u32));
        assert_eq!(domain_size(4, 4).unwrap(), BigUint::from(1u32));
        assert!(domain_size(4, 5).is_err());
        assert!(domain_size(4, 0).is_err());
    }
}
