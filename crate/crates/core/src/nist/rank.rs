//! Binary matrix rank test on 32x32 matrices.

use crate::error::{require_bits, Result};

const DIM: usize = 32;
const MATRIX_BITS: usize = DIM * DIM;

/// Rank over GF(2) of a matrix given as rows of bits.
pub fn gf2_rank(rows: &mut [u32]) -> usize {
    let mut rank = 0;
    for col in (0..32).rev() {
        let mask = 1u32 << col;
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & mask != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & mask != 0 {
                *row ^= pivot_row;
            }
        }
        rank += 1;
    }
    rank
}

/// Probability that a random `rows x cols` GF(2) matrix has rank `r`.
pub fn rank_probability(r: i32, rows: i32, cols: i32) -> f64 {
    let mut product = 1.0;
    for i in 0..r {
        product *= (1.0 - 2f64.powi(i - rows)) * (1.0 - 2f64.powi(i - cols)) / (1.0 - 2f64.powi(i - r));
    }
    2f64.powi(r * (rows + cols - r) - rows * cols) * product
}

pub fn rank(bits: &[u8]) -> Result<f64> {
    require_bits(38 * MATRIX_BITS, bits.len())?;
    let matrices = bits.len() / MATRIX_BITS;
    let p32 = rank_probability(32, 32, 32);
    let p31 = rank_probability(31, 32, 32);
    let p30 = 1.0 - (p32 + p31);
    let (mut f32, mut f31) = (0u64, 0u64);
    let mut rows = [0u32; DIM];
    for m in bits.chunks_exact(MATRIX_BITS) {
        for (row, chunk) in rows.iter_mut().zip(m.chunks_exact(DIM)) {
            *row = chunk.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        }
        match gf2_rank(&mut rows) {
            32 => f32 += 1,
            31 => f31 += 1,
            _ => {}
        }
    }
    let n = matrices as f64;
    let rest = (matrices as u64 - f32 - f31) as f64;
    let chi2 = (f32 as f64 - n * p32).powi(2) / (n * p32)
        + (f31 as f64 - n * p31).powi(2) / (n * p31)
        + (rest - n * p30).powi(2) / (n * p30);
    Ok((-chi2 / 2.0).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_simple_matrices() {
        let mut identity: Vec<u32> = (0..32).map(|i| 1u32 << i).collect();
        assert_eq!(gf2_rank(&mut identity), 32);
        let mut zero = vec![0u32; 32];
        assert_eq!(gf2_rank(&mut zero), 0);
        let mut dup = vec![0xdead_beefu32; 32];
        assert_eq!(gf2_rank(&mut dup), 1);
        let mut m: Vec<u32> = (0..32).map(|i| 1u32 << i).collect();
        m[5] = m[3] ^ m[7];
        assert_eq!(gf2_rank(&mut m), 31);
    }

    #[test]
    fn rank_probabilities_match_published_values() {
        assert!((rank_probability(32, 32, 32) - 0.2888).abs() < 1e-4);
        assert!((rank_probability(31, 32, 32) - 0.5776).abs() < 1e-4);
        // 7 * 6 * 4 = 168 of the 512 3x3 matrices are invertible
        assert!((rank_probability(3, 3, 3) - 168.0 / 512.0).abs() < 1e-15);
        let total: f64 = (0..=3).map(|r| rank_probability(r, 3, 3)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_rank_probabilities_by_enumeration() {
        // every 3x3 matrix over GF(2)
        let mut counts = [0u32; 4];
        for m in 0u32..512 {
            let mut rows: Vec<u32> = (0..3).map(|r| (m >> (3 * r)) & 7).collect();
            counts[gf2_rank(&mut rows)] += 1;
        }
        for (r, &c) in counts.iter().enumerate() {
            let p = rank_probability(r as i32, 3, 3);
            assert!((p - f64::from(c) / 512.0).abs() < 1e-15, "rank {r}");
        }
    }

    #[test]
    fn rank_needs_38_matrices() {
        assert!(rank(&vec![0u8; 37 * 1024]).is_err());
        let p = rank(&vec![0u8; 38 * 1024]).unwrap();
        assert!(p < 1e-10);
    }
}
