//! Runs of equal bits, read until `2n` runs are complete.
//!
//! Two statistics come out of one pass. The total length `Y` of the runs has
//! mean `4n` and variance `4n`; `original` standardises with `sqrt(8n)`,
//! `modified` with `sqrt(4n)`. The run-length table is compared with
//! `p_i = 2^-i` (last class `>= k` with `2^-(k-1)`); `original` divides each
//! squared deviation by `n p_i (1 - p_i)`, `modified` by `n p_i`. The χ²
//! statistic has `2k - 2` degrees of freedom.

use crate::bitstream::BitSource;
use crate::descriptor::Variant;
use crate::error::{config, Result};
use crate::numerics::{chi2_sf, normal_two_sided};

/// Run-length tallies. Index `i - 1` counts runs of length `i`; the last
/// entry counts runs of length `>= k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunCounts {
    pub x0: Vec<u64>,
    pub x1: Vec<u64>,
    /// Total bits in the `2n` runs.
    pub y: u64,
}

impl RunCounts {
    pub fn new(k: usize) -> Self {
        Self {
            x0: vec![0; k],
            x1: vec![0; k],
            y: 0,
        }
    }

    pub fn record(&mut self, bit: u8, len: u64) {
        let k = self.x0.len();
        let slot = (len as usize).min(k) - 1;
        if bit == 0 {
            self.x0[slot] += 1;
        } else {
            self.x1[slot] += 1;
        }
        self.y += len;
    }

    /// Reads `2n` runs from `source`. The bit after the last run stays unread.
    pub fn collect(source: &mut BitSource, n: u64, k: usize) -> Result<Self> {
        let mut counts = Self::new(k);
        for _ in 0..2 * n {
            let bit = source.peek_bit()?;
            let len = source.consume_run(bit)?;
            counts.record(bit, len);
        }
        Ok(counts)
    }

    /// Tallies the `2n` runs at the start of a bit slice.
    pub fn from_bits(bits: &[u8], n: u64, k: usize) -> Result<Self> {
        let mut counts = Self::new(k);
        let mut pos = 0;
        for _ in 0..2 * n {
            let Some(&bit) = bits.get(pos) else {
                return Err(crate::Error::InsufficientInput {
                    requested: pos as u64 + 1,
                    available: bits.len() as u64,
                });
            };
            let len = bits[pos..].iter().take_while(|&&b| b == bit).count();
            if pos + len == bits.len() {
                return Err(crate::Error::InsufficientInput {
                    requested: bits.len() as u64 + 1,
                    available: bits.len() as u64,
                });
            }
            counts.record(bit, len as u64);
            pos += len;
        }
        Ok(counts)
    }
}

/// Number of run-length classes for `n` run pairs: `1 + floor(log2(n / 5))`,
/// at least 2, so the open-ended class expects about 10 runs of each kind.
pub fn default_run_classes(n: u64) -> usize {
    let ratio = n as f64 / 5.0;
    if ratio < 2.0 {
        2
    } else {
        (1 + ratio.log2().floor() as usize).max(2)
    }
}

/// `[p_normal, p_chi2]` for collected counts.
pub fn string_run_from_counts(counts: &RunCounts, n: u64, variant: Variant) -> Result<[f64; 2]> {
    let k = counts.x0.len();
    if k < 2 || n == 0 {
        return config("string run: need n >= 1 and at least two length classes");
    }
    let nf = n as f64;
    let spread = match variant {
        Variant::Original => (8.0 * nf).sqrt(),
        Variant::Modified => (4.0 * nf).sqrt(),
    };
    let z = (counts.y as f64 - 4.0 * nf) / spread;
    let mut chi2 = 0.0;
    for i in 1..=k {
        let p = if i < k { 2f64.powi(-(i as i32)) } else { 2f64.powi(-(k as i32 - 1)) };
        let e = nf * p;
        let d = match variant {
            Variant::Original => e * (1.0 - p),
            Variant::Modified => e,
        };
        for x in [counts.x0[i - 1], counts.x1[i - 1]] {
            chi2 += (x as f64 - e).powi(2) / d;
        }
    }
    Ok([normal_two_sided(z)?, chi2_sf(2 * k - 2, chi2)?])
}

/// Reads `2n` runs from `source` with `k` length classes.
pub fn string_run_test(
    source: &mut BitSource,
    n: u64,
    k: usize,
    variant: Variant,
) -> Result<[f64; 2]> {
    if n == 0 {
        return config("string run: n must be positive");
    }
    let counts = RunCounts::collect(source, n, k)?;
    string_run_from_counts(&counts, n, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::SourceSpec;
    use proptest::prelude::*;

    #[test]
    fn alternating_bits() {
        let bits: Vec<u8> = (0..201).map(|i| (i % 2) as u8).collect();
        let c = RunCounts::from_bits(&bits, 100, 5).unwrap();
        assert_eq!(c.y, 200);
        assert_eq!(c.x0[0], 100);
        assert_eq!(c.x1[0], 100);
        let z = (200.0 - 400.0) / 20.0;
        assert_eq!(z, -10.0);
        let [p, _] = string_run_from_counts(&c, 100, Variant::Modified).unwrap();
        assert_eq!(p, libm::erfc(10.0 / 2f64.sqrt()));
        // a file of 0x55 bytes is the same sequence
        let spec = SourceSpec::from_bytes(vec![0x55u8; 26]);
        let mut src = spec.open(0).unwrap();
        let from_source = RunCounts::collect(&mut src, 100, 5).unwrap();
        assert_eq!(from_source.x0[0] + from_source.x1[0], 200);
        assert_eq!(from_source.y, 200);
        assert_eq!(src.bits_consumed(), 200);
    }

    proptest! {
        #[test]
        fn source_and_slice_agree(bytes in proptest::collection::vec(any::<u8>(), 40..80), n in 1u64..20) {
            let spec = SourceSpec::from_bytes(bytes.clone());
            let bits = crate::bitstream::BitBlock::from_bytes(&bytes).unwrap().into_bits();
            let a = RunCounts::collect(&mut spec.open(0).unwrap(), n, 4);
            let b = RunCounts::from_bits(&bits, n, 4);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a, &b);
                    prop_assert!(a.y >= 2 * n);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "source and slice disagree on exhaustion"),
            }
        }
    }

    #[test]
    fn consumes_exactly_y_bits() {
        let spec = SourceSpec::mt19937(vec![3]).unwrap();
        let mut src = spec.open(0).unwrap();
        let c = RunCounts::collect(&mut src, 1000, 8).unwrap();
        assert_eq!(src.bits_consumed(), c.y);
        let runs: u64 = c.x0.iter().chain(&c.x1).sum();
        assert_eq!(runs, 2000);
    }

    #[test]
    fn y_has_mean_and_variance_4n() {
        let spec = SourceSpec::mt19937(vec![0x5e]).unwrap();
        let mut src = spec.open(0).unwrap();
        let trials = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..trials {
            let c = RunCounts::collect(&mut src, 100, 4).unwrap();
            // drop the separating bit so consecutive trials stay independent
            src.next_bit().unwrap();
            s1 += c.y as f64;
            s2 += (c.y as f64).powi(2);
        }
        let mean = s1 / trials as f64;
        let var = s2 / trials as f64 - mean * mean;
        assert!((mean / 400.0 - 1.0).abs() < 0.01, "{mean}");
        assert!((var / 400.0 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn default_classes() {
        assert_eq!(default_run_classes(100_000), 15);
        assert_eq!(default_run_classes(1), 2);
        assert_eq!(default_run_classes(40), 4);
    }

    #[test]
    fn exhausted_file_is_an_error() {
        let spec = SourceSpec::from_bytes(vec![0u8; 4]);
        assert!(string_run_test(&mut spec.open(0).unwrap(), 1, 3, Variant::Modified).is_err());
    }
}
