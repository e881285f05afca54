//! Small numeric and hashing helpers shared across modules.

use sha2::{Digest, Sha256};

/// Pairwise (tree) summation. The reduction order depends only on the slice
/// length, so results are bit-reproducible regardless of how the inputs were
/// produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Derives a 64-bit seed from a list of labelled parts.
pub fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Hex SHA-256 of arbitrary bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    let squares: Vec<f64> = v.iter().map(|x| x * x).collect();
    pairwise_sum(&squares).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn seed_depends_on_part_boundaries() {
        let a = derive_seed(&[b"ab", b"c"]);
        let b = derive_seed(&[b"a", b"bc"]);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(&[b"ab", b"c"]));
    }
}
