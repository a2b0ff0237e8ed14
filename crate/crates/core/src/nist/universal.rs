//! Maurer's universal statistical test and Coron's variant.
//!
//! The sequence is cut into `L`-bit words; the first `Q = 10 * 2^L` words
//! initialise a table of last-seen positions and the remaining `K` words
//! each contribute a function of the distance `A` back to the previous
//! occurrence of the same word.
//!
//! `original` averages `log2 A` and uses the asymptotic mean and variance
//! tables of the reference implementation together with its `c(L, K)`
//! correction. `modified` averages Coron's `g(A) = H_{A-1} / ln 2`
//! (harmonic numbers), whose mean is obtained from the geometric series
//! for the distance distribution, with variance `c(L, K) Var[g] / K` where
//! `c(L, K) = d(L) + e(L) 2^L / K`.

use std::f64::consts::LN_2;

use crate::descriptor::Variant;
use crate::error::{Error, Result};
use crate::numerics::erfc;

pub const MIN_L: u32 = 3;
pub const MAX_L: u32 = 16;

/// Smallest sequence length for which block length `l` is used: `1010 * 2^l * l`.
/// For `l >= 6` this reproduces the reference thresholds (387840, 904960, ...).
pub fn min_bits_for(l: u32) -> u64 {
    1010 * (1u64 << l) * u64::from(l)
}

/// Block length for a sequence of `n` bits.
pub fn block_len_for(n: u64) -> Result<u32> {
    (MIN_L..=MAX_L)
        .rev()
        .find(|&l| n >= min_bits_for(l))
        .ok_or(Error::InsufficientInput {
            requested: min_bits_for(MIN_L),
            available: n,
        })
}

// Asymptotic E[log2 A] and Var[log2 A] shipped by the reference implementation
// (index L; entries below 6 are Maurer's published values).
const MAURER_MEAN: [f64; 17] = [
    0.0, 0.7326495, 1.5374383, 2.4016068, 3.3112247, 4.2534266, 5.2177052, 6.1962507,
    7.1836656, 8.1764248, 9.1723243, 10.170032, 11.168765, 12.168070, 13.167693, 14.167488,
    15.167379,
];
const MAURER_VAR: [f64; 17] = [
    0.0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384, 3.401,
    3.410, 3.416, 3.419, 3.421,
];

// Coron's variance correction c(L, K) = d(L) + e(L) 2^L / K (index L - 3).
const CORON_D: [f64; 14] = [
    0.3313257, 0.3516506, 0.3660832, 0.3758725, 0.3822459, 0.3862500, 0.3886906, 0.3901408,
    0.3909846, 0.3914671, 0.3917390, 0.3918905, 0.3919740, 0.3920198,
];
const CORON_E: [f64; 14] = [
    0.4381809, 0.4050170, 0.3856668, 0.3743782, 0.3678269, 0.3640569, 0.3619091, 0.3606982,
    0.3600222, 0.3596484, 0.3594433, 0.3593316, 0.3592712, 0.3592384,
];

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HARMONIC_TABLE: usize = 64;

/// `H_m = 1 + 1/2 + ... + 1/m`, with `H_0 = 0`.
pub fn harmonic(m: u64) -> f64 {
    if (m as usize) < HARMONIC_TABLE {
        (1..=m).rev().map(|k| 1.0 / k as f64).sum()
    } else {
        let x = m as f64;
        let x2 = x * x;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
    }
}

/// Coron's per-word function `g(i) = H_{i-1} / ln 2`.
pub fn coron_g(i: u64) -> f64 {
    harmonic(i - 1) / LN_2
}

/// `Σ_{i>=1} p q^{i-1} f(i)` and `Σ p q^{i-1} f(i)^2` for `p = 2^-L`, the
/// first two moments of `f(A)` for the geometric distance `A`. The sum stops
/// once the remaining geometric mass times the current `f^2` is below
/// `1e-12` of the accumulated second moment.
pub fn geometric_moments(l: u32, f: impl Fn(u64) -> f64) -> (f64, f64) {
    let p = 2f64.powi(-(l as i32));
    let q = 1.0 - p;
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut weight = p;
    let mut tail = 1.0; // P(A >= i)
    let mut i = 1u64;
    loop {
        let v = f(i);
        m1 += weight * v;
        m2 += weight * v * v;
        tail -= weight;
        weight *= q;
        i += 1;
        // f grows like log i, so the tail beyond i is bounded by a small
        // multiple of tail * f(i)^2
        let bound = tail * (v + 1.0 + (1.0 / p).ln()).powi(2) * 4.0;
        if i > 2 && bound < 1e-12 * m2.max(1e-300) {
            break;
        }
    }
    (m1, m2)
}

/// Mean of Coron's `g(A)`; analytically equal to `L`.
pub fn coron_mean(l: u32) -> f64 {
    geometric_moments(l, coron_g).0
}

/// Variance of Coron's `g(A)` from the series.
pub fn coron_var(l: u32) -> f64 {
    let (m1, m2) = geometric_moments(l, coron_g);
    m2 - m1 * m1
}

/// `E[log2 A]`, the quantity tabulated for the original statistic.
pub fn log2_gap_mean(l: u32) -> f64 {
    geometric_moments(l, |i| (i as f64).log2()).0
}

/// Fixed configuration for one sequence length and variant.
#[derive(Debug, Clone)]
pub struct Universal {
    pub l: u32,
    pub q: usize,
    pub k: usize,
    pub variant: Variant,
    mean: f64,
    sigma: f64,
}

impl Universal {
    pub fn new(n: u64, variant: Variant) -> Result<Self> {
        let l = block_len_for(n)?;
        let q = 10usize << l;
        let k = (n / u64::from(l)) as usize - q;
        let kf = k as f64;
        let li = l as usize;
        let (mean, sigma) = match variant {
            Variant::Original => {
                let lf = f64::from(l);
                let c = 0.7 - 0.8 / lf + (4.0 + 32.0 / lf) * kf.powf(-3.0 / lf) / 15.0;
                (MAURER_MEAN[li], c * (MAURER_VAR[li] / kf).sqrt())
            }
            Variant::Modified => {
                let (m1, m2) = geometric_moments(l, coron_g);
                let var_g = m2 - m1 * m1;
                let c = CORON_D[li - 3] + CORON_E[li - 3] * 2f64.powi(l as i32) / kf;
                (m1, (c * var_g / kf).sqrt())
            }
        };
        Ok(Self {
            l,
            q,
            k,
            variant,
            mean,
            sigma,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of bits the test reads.
    pub fn bits_used(&self) -> usize {
        (self.q + self.k) * self.l as usize
    }

    /// Average of `log2 A` (original) or `g(A)` (modified) over the test words.
    pub fn statistic(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() < self.bits_used() {
            return Err(Error::InsufficientInput {
                requested: self.bits_used() as u64,
                available: bits.len() as u64,
            });
        }
        let l = self.l as usize;
        let mut last = vec![0u64; 1 << l];
        let word = |i: usize| {
            bits[i * l..(i + 1) * l]
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | b as usize)
        };
        for i in 0..self.q {
            last[word(i)] = i as u64 + 1;
        }
        let mut sum = 0.0;
        for i in self.q..self.q + self.k {
            let w = word(i);
            let pos = i as u64 + 1;
            let gap = pos - last[w];
            last[w] = pos;
            sum += match self.variant {
                Variant::Original => (gap as f64).log2(),
                Variant::Modified => coron_g(gap),
            };
        }
        Ok(sum / self.k as f64)
    }

    pub fn pvalue(&self, bits: &[u8]) -> Result<f64> {
        let stat = self.statistic(bits)?;
        erfc((stat - self.mean).abs() / (std::f64::consts::SQRT_2 * self.sigma))
    }
}

pub fn universal_test(bits: &[u8], variant: Variant) -> Result<f64> {
    Universal::new(bits.len() as u64, variant)?.pvalue(bits)
}
