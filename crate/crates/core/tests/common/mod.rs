#![allow(dead_code)]

//! Test-side oracles written independently of the library code paths.

use fla_core::cellspace::{decode, Genotype, GENOTYPE_BITS};

/// splitmix64 finalizer, written out from its published constants.
pub fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Bits of `idx` as a length-`n` string, most significant first.
pub fn bits_of(idx: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (idx >> (n - 1 - i)) & 1 == 1).collect()
}

/// NK fitness straight from the definition: mean over components `i` of a
/// hashed table entry keyed by `(seed, i, x[i..=i+k] circular)`.
pub fn nk_oracle(n: usize, k: usize, seed: u64, x: &[bool]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let pattern: u64 = (0..=k).filter(|j| x[(i + j) % n]).map(|j| 1u64 << j).sum();
        let h = splitmix(splitmix(splitmix(seed) ^ i as u64) ^ pattern);
        total += (h >> 11) as f64 * 2f64.powi(-53);
    }
    total / n as f64
}

/// Every one of the 2^n values, in index order.
pub fn nk_table(n: usize, k: usize, seed: u64) -> Vec<f64> {
    (0..1usize << n)
        .map(|i| nk_oracle(n, k, seed, &bits_of(i, n)))
        .collect()
}

/// Brute force: a flip is a valid neighbor iff it decodes.
pub fn brute_valid_neighbors(g: &Genotype) -> Vec<Genotype> {
    (0..GENOTYPE_BITS)
        .map(|i| g.flip(i))
        .filter(|h| decode(h).is_ok())
        .collect()
}
