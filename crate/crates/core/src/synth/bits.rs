use rand::Rng;

use crate::rng::{purpose, stream};

/// `count` uniform i.i.d. bits, deterministic per seed.
pub fn gen_bits(count: usize, seed: u64) -> Vec<bool> {
    let mut rng = stream(seed, purpose::BITS);
    (0..count).map(|_| rng.random::<bool>()).collect()
}

pub fn gray_encode(n: usize) -> usize {
    n ^ (n >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut n = g;
    while g > 1 {
        g >>= 1;
        n ^= g;
    }
    n
}

/// Unsigned integer from bits, most significant first.
pub fn bits_to_uint(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// `width` bits of `value`, most significant first.
pub fn uint_to_bits(value: usize, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// Groups `bits` into symbol labels of `width` bits each.
pub fn labels(bits: &[bool], width: usize) -> Vec<usize> {
    bits.chunks(width).map(bits_to_uint).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(gen_bits(8, 1), gen_bits(8, 1));
        assert_eq!(gen_bits(1, 99).len(), 1);
        assert_ne!(gen_bits(64, 1), gen_bits(64, 2));
    }

    #[test]
    fn balanced() {
        let ones = gen_bits(100_000, 3).iter().filter(|b| **b).count();
        let frac = ones as f64 / 1e5;
        assert!((0.49..=0.51).contains(&frac), "{frac}");
    }

    #[test]
    fn gray_roundtrip_and_adjacency() {
        for n in 0..1024 {
            assert_eq!(gray_decode(gray_encode(n)), n);
            let d = gray_encode(n) ^ gray_encode(n + 1);
            assert_eq!(d.count_ones(), 1);
        }
    }

    #[test]
    fn bit_packing() {
        assert_eq!(bits_to_uint(&[true, false, true]), 5);
        assert_eq!(uint_to_bits(5, 4), vec![false, true, false, true]);
        assert_eq!(labels(&[true, true, false, true], 2), vec![3, 1]);
    }
}
