//! Linear complexity test: Berlekamp–Massey on consecutive `M`-bit blocks,
//! deviations from the mean sorted into seven classes.

use crate::error::{config, require_bits, Result};
use crate::numerics::igamc;

/// Class probabilities from the reference implementation.
const PI: [f64; 7] = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];

/// `c ^= b << shift`, over the first `len` words.
fn xor_shifted(c: &mut [u64], b: &[u64], shift: usize, len: usize) {
    let (words, bits) = (shift / 64, shift % 64);
    for i in (words..len).rev() {
        let src = i - words;
        let mut v = b[src] << bits;
        if bits > 0 && src > 0 {
            v |= b[src - 1] >> (64 - bits);
        }
        c[i] ^= v;
    }
}

/// Linear complexity of a bit sequence.
///
/// Polynomials are packed 64 coefficients to a word. Before step `i`,
/// bit `j >= 1` of `history` holds `s[i - j]`, so the discrepancy is the
/// parity of `c & history`.
pub fn berlekamp_massey(s: &[u8]) -> usize {
    let n = s.len();
    let words = (n + 1).div_ceil(64);
    let mut c = vec![0u64; words];
    let mut b = vec![0u64; words];
    let mut t = vec![0u64; words];
    let mut history = vec![0u64; words];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m: isize = -1;
    for (i, &bit) in s.iter().enumerate() {
        // c has degree <= l <= i and history holds bits up to i
        let active = (i + 1) / 64 + 1;
        let ones: u32 = c[..active]
            .iter()
            .zip(&history[..active])
            .map(|(x, y)| (x & y).count_ones())
            .sum();
        if bit ^ (ones & 1) as u8 == 1 {
            let shift = (i as isize - m) as usize;
            // the update can raise the degree to shift + deg(b) <= i + 1
            let len = ((i + 2) / 64 + 1).min(words);
            if l <= i / 2 {
                t[..len].copy_from_slice(&c[..len]);
                xor_shifted(&mut c, &b, shift, len);
                l = i + 1 - l;
                m = i as isize;
                std::mem::swap(&mut b, &mut t);
            } else {
                xor_shifted(&mut c, &b, shift, len);
            }
        }
        let top = ((i + 2) / 64 + 1).min(words);
        let mut carry = 0u64;
        for w in history[..top].iter_mut() {
            let next = *w >> 63;
            *w = (*w << 1) | carry;
            carry = next;
        }
        history[0] = (history[0] & !0b11) | (u64::from(bit) << 1);
    }
    l
}

pub fn linear_complexity(bits: &[u8], block_len: usize) -> Result<f64> {
    if block_len < 2 {
        return config("linear complexity: block length must be at least 2");
    }
    require_bits(block_len, bits.len())?;
    let mf = block_len as f64;
    let sign = if block_len.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mu = mf / 2.0 + (9.0 - sign) / 36.0 - (mf / 3.0 + 2.0 / 9.0) / 2f64.powf(mf);
    let mut nu = [0u64; 7];
    for block in bits.chunks_exact(block_len) {
        let l = berlekamp_massey(block) as f64;
        let t = sign * (l - mu) + 2.0 / 9.0;
        let class = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        nu[class] += 1;
    }
    let blocks = (bits.len() / block_len) as f64;
    let chi2: f64 = nu
        .iter()
        .zip(PI)
        .map(|(&v, p)| (v as f64 - blocks * p).powi(2) / (blocks * p))
        .sum();
    igamc(3.0, chi2 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Smallest L such that some L-stage LFSR generates `s`, by exhaustive
    /// search over connection polynomials.
    fn brute_force_complexity(s: &[u8]) -> usize {
        let n = s.len();
        for l in 0..=n {
            for taps in 0u32..(1 << l) {
                let ok = (l..n).all(|i| {
                    let mut v = 0;
                    for j in 1..=l {
                        v ^= ((taps >> (j - 1)) & 1) as u8 & s[i - j];
                    }
                    v == s[i]
                });
                if ok {
                    return l;
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn known_sequences() {
        // 1101011110001, the documented example, has L = 4
        let s: Vec<u8> = "1101011110001".bytes().map(|c| c - b'0').collect();
        assert_eq!(berlekamp_massey(&s), 4);
        assert_eq!(berlekamp_massey(&[0; 10]), 0);
        let mut impulse = vec![0u8; 9];
        impulse.push(1);
        assert_eq!(berlekamp_massey(&impulse), 10);
    }

    proptest! {
        #[test]
        fn bm_matches_exhaustive_search(v in proptest::collection::vec(0u8..2, 1..13)) {
            prop_assert_eq!(berlekamp_massey(&v), brute_force_complexity(&v));
        }
    }

    #[test]
    fn packed_matches_unpacked_on_long_block() {
        let s: Vec<u8> = (0..500u32).map(|i| ((i * 7919 + i / 3) % 5 % 2) as u8).collect();
        let l = berlekamp_massey(&s);
        // byte-per-coefficient version of the same recursion
        let naive = {
            let n = s.len();
            let mut c = vec![0u8; n + 1];
            let mut b = vec![0u8; n + 1];
            c[0] = 1;
            b[0] = 1;
            let (mut l, mut m) = (0usize, -1isize);
            for i in 0..n {
                let mut d = s[i];
                for j in 1..=l {
                    d ^= c[j] & s[i - j];
                }
                if d == 1 {
                    let t = c.clone();
                    let shift = (i as isize - m) as usize;
                    for j in 0..=n - shift {
                        c[j + shift] ^= b[j];
                    }
                    if l <= i / 2 {
                        l = i + 1 - l;
                        m = i as isize;
                        b = t;
                    }
                }
            }
            l
        };
        assert_eq!(l, naive);
    }

    #[test]
    fn class_probabilities_sum_to_one() {
        assert!((PI.iter().sum::<f64>() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn degenerate_blocks() {
        for b in [0u8, 1] {
            let p = linear_complexity(&vec![b; 100_000], 500).unwrap();
            assert!(p < 1e-10);
        }
        assert!(linear_complexity(&[1u8; 100], 500).is_err());
    }
}
