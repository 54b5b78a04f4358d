//! Quantizer (H1), seeded bucket hash (H2) and seed derivation.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit avalanche finalizer (MurmurHash3 fmix64).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 33;
    z = z.wrapping_mul(0xff51_afd7_ed55_8ccd);
    z ^= z >> 33;
    z = z.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z ^ (z >> 33)
}

/// Deterministic child seed for `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master ^ GOLDEN), |s, &p| {
        mix64(s.wrapping_mul(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

#[inline]
pub(crate) fn quantize(v: f64, epsilon: f64, b: f64) -> i64 {
    libm::floor((v + b) / epsilon) as i64
}

/// Component-wise floor((x_i + b) / epsilon).
pub fn h1_quantize(x: &[f64], epsilon: f64, b_offset: f64) -> Result<Vec<i64>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::config("epsilon must be positive and finite"));
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(x.iter().map(|&v| quantize(v, epsilon, b_offset)).collect())
}

/// Seeded hash from quantized vectors to buckets `1..=n_buckets`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BucketHasher {
    init: u64,
    n_buckets: u64,
}

impl BucketHasher {
    pub(crate) fn new(seed: u64, n_buckets: u64) -> Self {
        debug_assert!(n_buckets >= 1);
        BucketHasher {
            init: mix64(seed ^ 0xD6E8_FEB8_6659_FD93),
            n_buckets,
        }
    }

    #[inline]
    pub(crate) fn start(&self) -> u64 {
        self.init
    }

    #[inline]
    pub(crate) fn absorb(state: u64, q: i64) -> u64 {
        mix64(state.wrapping_mul(GOLDEN) ^ q as u64)
    }

    #[inline]
    pub(crate) fn finish(&self, state: u64) -> u64 {
        1 + mix64(state) % self.n_buckets
    }

    pub(crate) fn bucket(&self, q: &[i64]) -> u64 {
        self.finish(q.iter().fold(self.start(), |s, &v| Self::absorb(s, v)))
    }
}

/// H2: bucket in `1..=n_buckets` for a quantized vector.
pub fn h2_bucket(q: &[i64], n_buckets: u64, seed: u64) -> Result<u64> {
    if n_buckets < 1 {
        return Err(Error::config("n_buckets must be at least 1"));
    }
    Ok(BucketHasher::new(seed, n_buckets).bucket(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn h1_examples() {
        assert_eq!(h1_quantize(&[2.3, -0.7], 1.0, 0.0).unwrap(), vec![2, -1]);
        assert_eq!(h1_quantize(&[1.0], 0.5, 0.25).unwrap(), vec![2]);
        assert_eq!(h1_quantize(&[0.0, 0.0, 0.0], 0.3, 0.0).unwrap(), vec![0, 0, 0]);
        assert!(h1_quantize(&[1.0], 0.0, 0.0).is_err());
        assert!(h1_quantize(&[f64::NAN], 1.0, 0.0).is_err());
    }

    #[test]
    fn h2_examples() {
        let a = h2_bucket(&[3, -4, 7], 1000, 42).unwrap();
        assert_eq!(a, h2_bucket(&[3, -4, 7], 1000, 42).unwrap());
        assert!((1..=1000).contains(&a));
        assert_eq!(h2_bucket(&[5], 1, 9).unwrap(), 1);
        assert!(h2_bucket(&[5], 0, 9).is_err());
    }

    #[test]
    fn h2_order_matters() {
        let seeds_differing = (0..64)
            .filter(|&s| h2_bucket(&[1, 2], 1 << 40, s).unwrap() != h2_bucket(&[2, 1], 1 << 40, s).unwrap())
            .count();
        assert_eq!(seeds_differing, 64);
    }

    #[test]
    fn derive_seed_separates_paths() {
        let a = derive_seed(7, &[1, 2]);
        assert_ne!(a, derive_seed(7, &[2, 1]));
        assert_ne!(a, derive_seed(8, &[1, 2]));
        assert_eq!(a, derive_seed(7, &[1, 2]));
    }
}
