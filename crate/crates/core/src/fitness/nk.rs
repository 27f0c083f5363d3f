use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitString, LengthMismatch};
use crate::seed::mix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NkError {
    #[error("NK needs 0 <= k < n and k <= 63, got n={n} k={k}")]
    BadK { n: usize, k: usize },
    #[error("NK needs n >= 1")]
    Empty,
    #[error("budget noise must be finite and non-negative, got {0}")]
    BadNoise(f64),
}

/// NK landscape with circular adjacent neighborhoods: component `i` reads
/// bits `i, i+1, ..., i+k` (mod n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NkConfig {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl NkConfig {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self, NkError> {
        if n == 0 {
            return Err(NkError::Empty);
        }
        if k >= n || k > 63 {
            return Err(NkError::BadK { n, k });
        }
        Ok(NkConfig { n, k, seed })
    }

    pub(crate) fn reseeded(&self, seed: u64) -> Self {
        NkConfig { seed, ..*self }
    }
}

/// Contribution table entry of component `component` for the local
/// pattern `pattern` (bit `j` of the pattern is the component's `j`-th
/// input). Uniform on `[0, 1)`, derived by integer hashing only.
pub fn component_value(seed: u64, component: usize, pattern: u64) -> f64 {
    let h = mix(mix(mix(seed) ^ component as u64) ^ pattern);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Mean of the `n` component contributions.
pub fn nk_fitness<B: BitString>(cfg: &NkConfig, x: &B) -> Result<f64, LengthMismatch> {
    if x.bit_len() != cfg.n {
        return Err(LengthMismatch {
            left: x.bit_len(),
            right: cfg.n,
        });
    }
    let mut sum = 0.0;
    for i in 0..cfg.n {
        let mut pattern = 0u64;
        for j in 0..=cfg.k {
            if x.bit((i + j) % cfg.n) {
                pattern |= 1 << j;
            }
        }
        sum += component_value(cfg.seed, i, pattern);
    }
    Ok(sum / cfg.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::SmallBits;

    #[test]
    fn config_bounds() {
        assert!(NkConfig::new(10, 10, 0).is_err());
        assert!(NkConfig::new(0, 0, 0).is_err());
        assert!(NkConfig::new(100, 64, 0).is_err());
        assert!(NkConfig::new(10, 9, 0).is_ok());
    }

    #[test]
    fn deterministic_and_bounded() {
        let cfg = NkConfig::new(12, 3, 42).unwrap();
        for idx in [0u64, 1, 777, 4095] {
            let x = SmallBits::from_index(idx, 12);
            let a = nk_fitness(&cfg, &x).unwrap();
            assert_eq!(a, nk_fitness(&cfg, &x).unwrap());
            assert!((0.0..1.0).contains(&a));
        }
    }

    #[test]
    fn length_mismatch() {
        let cfg = NkConfig::new(12, 3, 42).unwrap();
        assert!(nk_fitness(&cfg, &SmallBits::from_index(0, 11)).is_err());
    }

    #[test]
    fn pinned_values() {
        // cross-platform pin: integer hashing only
        assert_eq!(mix(0), 0xE220_A839_7B1D_CDAF);
        let v = component_value(1, 2, 3);
        assert_eq!(v, component_value(1, 2, 3));
        assert_ne!(v, component_value(1, 2, 4));
    }

    #[test]
    fn k0_flip_changes_one_term() {
        let cfg = NkConfig::new(8, 0, 3).unwrap();
        let x = SmallBits::from_index(0b1010_0110, 8);
        let y = x.flipped(2);
        let diff = nk_fitness(&cfg, &y).unwrap() - nk_fitness(&cfg, &x).unwrap();
        let expected =
            (component_value(3, 2, y.bit(2) as u64) - component_value(3, 2, x.bit(2) as u64)) / 8.0;
        assert!((diff - expected).abs() < 1e-15);
    }
}
