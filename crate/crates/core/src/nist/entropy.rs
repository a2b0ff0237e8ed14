//! Approximate entropy and serial tests. Both count overlapping `m`-bit
//! patterns with wraparound (the first `m - 1` bits are appended).

use crate::error::{config, require_bits, Result};
use crate::numerics::igamc;

/// Counts of each `m`-bit pattern over the `n` cyclic windows.
pub fn cyclic_pattern_counts(bits: &[u8], m: u32) -> Vec<u64> {
    let mut counts = vec![0u64; 1usize << m];
    if m == 0 {
        counts[0] = bits.len() as u64;
        return counts;
    }
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut window = 0usize;
    for i in 0..m as usize - 1 {
        window = (window << 1) | bits[i % n] as usize;
    }
    for i in m as usize - 1..n + m as usize - 1 {
        window = ((window << 1) | bits[i % n] as usize) & mask;
        counts[window] += 1;
    }
    counts
}

/// Counts for `m - 1` from counts for `m`: drop the last bit of each pattern.
/// Valid for cyclic counts.
fn marginal(counts: &[u64]) -> Vec<u64> {
    counts.chunks_exact(2).map(|pair| pair[0] + pair[1]).collect()
}

fn phi(counts: &[u64], n: usize) -> f64 {
    let nf = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            p * p.ln()
        })
        .sum()
}

pub fn approximate_entropy(bits: &[u8], m: u32) -> Result<f64> {
    if m == 0 || m > 24 {
        return config(format!("approximate entropy: m={m} out of range 1..=24"));
    }
    require_bits(m as usize + 1, bits.len())?;
    let n = bits.len();
    let c_next = cyclic_pattern_counts(bits, m + 1);
    let c_m = marginal(&c_next);
    let apen = phi(&c_m, n) - phi(&c_next, n);
    let chi2 = 2.0 * n as f64 * (std::f64::consts::LN_2 - apen);
    igamc(2f64.powi(m as i32 - 1), chi2 / 2.0)
}

fn psi_sq(counts: &[u64], n: usize) -> f64 {
    let sum: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    sum * counts.len() as f64 / n as f64 - n as f64
}

/// Serial test, returning `[p1, p2]`.
pub fn serial(bits: &[u8], m: u32) -> Result<[f64; 2]> {
    if !(2..=24).contains(&m) {
        return config(format!("serial: m={m} out of range 2..=24"));
    }
    require_bits(m as usize, bits.len())?;
    let n = bits.len();
    let c_m = cyclic_pattern_counts(bits, m);
    let c_m1 = marginal(&c_m);
    let c_m2 = marginal(&c_m1);
    let psi_m = psi_sq(&c_m, n);
    let psi_m1 = psi_sq(&c_m1, n);
    // psi^2 for pattern length 0 is 0
    let psi_m2 = if m >= 3 { psi_sq(&c_m2, n) } else { 0.0 };
    let d1 = psi_m - psi_m1;
    let d2 = psi_m - 2.0 * psi_m1 + psi_m2;
    Ok([
        igamc(2f64.powi(m as i32 - 2), d1 / 2.0)?,
        igamc(2f64.powi(m as i32 - 3), d2 / 2.0)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::BitBlock;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<u8> {
        s.parse::<BitBlock>().unwrap().into_bits()
    }

    #[test]
    fn apen_reference_example() {
        // 0100110101, m = 3: chi2 = 0.502193, p = 0.261961
        let p = approximate_entropy(&bits("0100110101"), 3).unwrap();
        assert!((p - 0.261_961).abs() < 1e-6, "{p}");
    }

    #[test]
    fn serial_reference_example() {
        // 0011011101, m = 3: p1 = 0.808792, p2 = 0.670320
        let [p1, p2] = serial(&bits("0011011101"), 3).unwrap();
        assert!((p1 - 0.808_792).abs() < 1e-6, "{p1}");
        assert!((p2 - 0.670_320).abs() < 1e-6, "{p2}");
    }

    proptest! {
        #[test]
        fn marginal_equals_direct_counts(v in proptest::collection::vec(0u8..2, 20..200), m in 1u32..6) {
            let c = cyclic_pattern_counts(&v, m + 1);
            prop_assert_eq!(marginal(&c), cyclic_pattern_counts(&v, m));
        }
    }

    #[test]
    fn degenerate_blocks() {
        for b in [0u8, 1] {
            let block = vec![b; 10_000];
            assert!(approximate_entropy(&block, 10).unwrap() < 1e-10);
            let [p1, p2] = serial(&block, 16).unwrap();
            assert!(p1 < 1e-10);
            assert!((0.0..=1.0).contains(&p2));
        }
    }
}
