//! Longest run of ones in a block.
//!
//! The `original` variant uses the class probabilities hard-coded in the
//! reference implementation (four decimals for M = 10^4). The `modified`
//! variant uses exact probabilities from a dynamic program over strings with
//! a bounded longest run, rounded to fifteen decimals.

use crate::descriptor::Variant;
use crate::error::{config, require_bits, Result};
use crate::numerics::igamc;

/// Block length and class boundaries: class 0 is "longest run <= low",
/// the last class is ">= high", and each value in between is its own class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunClasses {
    pub block_len: usize,
    pub low: usize,
    pub high: usize,
}

impl RunClasses {
    pub fn count(&self) -> usize {
        self.high - self.low + 1
    }

    fn class_of(&self, longest: usize) -> usize {
        longest.clamp(self.low, self.high) - self.low
    }
}

/// Standard configuration for a sequence of `n` bits, with the legacy
/// probabilities shipped by the reference implementation.
pub fn standard_config(n: usize) -> Result<(RunClasses, &'static [f64])> {
    // sts-2.1.2 longestRunOfOnes.c
    const PI_8: [f64; 4] = [0.21484375, 0.3671875, 0.23046875, 0.1875];
    const PI_128: [f64; 6] = [
        0.1174035788,
        0.242955959,
        0.249363483,
        0.17517706,
        0.102701071,
        0.112398847,
    ];
    const PI_10000: [f64; 7] = [0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727];
    require_bits(128, n)?;
    Ok(if n < 6272 {
        (RunClasses { block_len: 8, low: 1, high: 4 }, &PI_8)
    } else if n < 750_000 {
        (RunClasses { block_len: 128, low: 4, high: 9 }, &PI_128)
    } else {
        (RunClasses { block_len: 10_000, low: 10, high: 16 }, &PI_10000)
    })
}

/// Number of `m`-bit strings whose longest run of ones is at most `r`.
/// Exact for `m < 128`.
pub fn count_longest_at_most(m: usize, r: usize) -> u128 {
    assert!(m < 128, "exact counts overflow beyond 127 bits");
    // ways[j]: strings ending in exactly j trailing ones
    let mut ways = vec![0u128; r + 1];
    ways[0] = 1;
    for _ in 0..m {
        let total: u128 = ways.iter().sum();
        for j in (1..=r).rev() {
            ways[j] = ways[j - 1];
        }
        ways[0] = total;
    }
    ways.iter().sum()
}

/// Probability that the longest run of ones in `m` random bits is at most `r`.
pub fn prob_longest_at_most(m: usize, r: usize) -> f64 {
    let mut probs = vec![0f64; r + 1];
    probs[0] = 1.0;
    for _ in 0..m {
        let total: f64 = probs.iter().sum::<f64>() * 0.5;
        for j in (1..=r).rev() {
            probs[j] = probs[j - 1] * 0.5;
        }
        probs[0] = total;
    }
    probs.iter().sum()
}

/// Exact class counts out of `2^block_len` strings (`block_len < 128`).
pub fn longest_run_class_counts(classes: RunClasses) -> Vec<u128> {
    let m = classes.block_len;
    let cdf = |r: usize| count_longest_at_most(m, r);
    let mut counts = Vec::with_capacity(classes.count());
    counts.push(cdf(classes.low));
    for v in classes.low + 1..classes.high {
        counts.push(cdf(v) - cdf(v - 1));
    }
    let total: u128 = 1u128 << m;
    counts.push(total - cdf(classes.high - 1));
    counts
}

/// Class probabilities from the exact dynamic program.
pub fn longest_run_class_probs(classes: RunClasses) -> Vec<f64> {
    let m = classes.block_len;
    let cdf = |r: usize| prob_longest_at_most(m, r);
    let mut probs = Vec::with_capacity(classes.count());
    probs.push(cdf(classes.low));
    for v in classes.low + 1..classes.high {
        probs.push(cdf(v) - cdf(v - 1));
    }
    probs.push(1.0 - cdf(classes.high - 1));
    probs
}

fn round15(x: f64) -> f64 {
    (x * 1e15).round() / 1e15
}

/// Probabilities used by the given variant for a sequence of `n` bits.
pub fn variant_probs(n: usize, variant: Variant) -> Result<(RunClasses, Vec<f64>)> {
    let (classes, legacy) = standard_config(n)?;
    let probs = match variant {
        Variant::Original => legacy.to_vec(),
        Variant::Modified => longest_run_class_probs(classes)
            .into_iter()
            .map(round15)
            .collect(),
    };
    Ok((classes, probs))
}

fn longest_run_in(block: &[u8]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for &b in block {
        if b == 1 {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// χ² statistic over the longest-run classes of consecutive blocks.
pub fn longest_run_with(bits: &[u8], classes: RunClasses, probs: &[f64]) -> Result<f64> {
    if probs.len() != classes.count() {
        return config("longest run: probability vector does not match the classes");
    }
    require_bits(classes.block_len, bits.len())?;
    let blocks = bits.len() / classes.block_len;
    let mut nu = vec![0u64; classes.count()];
    for block in bits.chunks_exact(classes.block_len) {
        nu[classes.class_of(longest_run_in(block))] += 1;
    }
    let nf = blocks as f64;
    let chi2: f64 = nu
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = nf * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    igamc((classes.count() - 1) as f64 / 2.0, chi2 / 2.0)
}

/// Longest-run test with the standard configuration for `bits.len()`.
pub fn longest_run_test(bits: &[u8], variant: Variant) -> Result<f64> {
    let (classes, probs) = variant_probs(bits.len(), variant)?;
    longest_run_with(&bits[..classes.block_len * (bits.len() / classes.block_len)], classes, &probs)
}
