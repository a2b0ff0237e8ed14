//! Template matching tests.
//!
//! Non-overlapping: one p-value per aperiodic template of length `m`
//! (148 of them for `m = 9`). Overlapping: the all-ones template, with
//! occurrence classes {0, 1, 2, 3, 4, >=5} per window of `M = 1032` bits.
//!
//! The reference implementation of the overlapping test overwrites its
//! accurate class probabilities with values from an approximation formula
//! before use. `original` reproduces that; `modified` uses the exact
//! distribution from a run-length automaton.

use crate::descriptor::Variant;
use crate::error::{config, require_bits, Result};
use crate::numerics::{igamc, ln_gamma};

/// Whether a pattern of `m` bits has no proper border, i.e. it never
/// matches a proper shift of itself.
pub fn is_aperiodic(pattern: u32, m: u32) -> bool {
    (1..m).all(|shift| {
        let overlap = m - shift;
        let mask = (1u32 << overlap) - 1;
        // suffix of length `overlap` vs prefix of length `overlap`
        (pattern & mask) != (pattern >> shift)
    })
}

/// All aperiodic templates of length `m` in ascending order, read MSB first.
pub fn aperiodic_templates(m: u32) -> Vec<u32> {
    assert!((2..=16).contains(&m));
    (0..1u32 << m).filter(|&p| is_aperiodic(p, m)).collect()
}

/// Non-overlapping template test parameters.
#[derive(Debug, Clone)]
pub struct NonOverlapping {
    pub m: u32,
    pub blocks: usize,
    templates: Vec<u32>,
}

impl NonOverlapping {
    pub fn new(m: u32, blocks: usize) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return config(format!("template length {m} out of range 2..=16"));
        }
        if blocks == 0 {
            return config("non-overlapping template test needs at least one block");
        }
        Ok(Self {
            m,
            blocks,
            templates: aperiodic_templates(m),
        })
    }

    pub fn templates(&self) -> &[u32] {
        &self.templates
    }

    /// One p-value per template.
    pub fn pvalues(&self, bits: &[u8]) -> Result<Vec<f64>> {
        let m = self.m as usize;
        let block_len = bits.len() / self.blocks;
        require_bits(m, block_len)?;
        let mask = (1usize << m) - 1;
        // Occurrences of an aperiodic template cannot overlap, so the
        // skip-after-match scan equals a plain count of matching windows.
        let mut counts = vec![vec![0u32; 1 << m]; self.blocks];
        for (block, hist) in bits.chunks_exact(block_len).zip(counts.iter_mut()) {
            let mut window = 0usize;
            for &b in &block[..m - 1] {
                window = (window << 1) | b as usize;
            }
            for &b in &block[m - 1..] {
                window = ((window << 1) | b as usize) & mask;
                hist[window] += 1;
            }
        }
        let mf = block_len as f64;
        let two_m = 2f64.powi(self.m as i32);
        let mu = (mf - m as f64 + 1.0) / two_m;
        let var = mf * (1.0 / two_m - (2.0 * m as f64 - 1.0) / (two_m * two_m));
        self.templates
            .iter()
            .map(|&t| {
                let chi2: f64 = counts
                    .iter()
                    .map(|hist| (f64::from(hist[t as usize]) - mu).powi(2) / var)
                    .sum();
                igamc(self.blocks as f64 / 2.0, chi2 / 2.0)
            })
            .collect()
    }
}

/// Number of classes for the overlapping test: 0..K-1 occurrences and ">= K".
pub const OVERLAP_CLASSES: usize = 6;
const OVERLAP_K: usize = OVERLAP_CLASSES - 1;

/// Probability of `u` occurrences under the compound-Poisson approximation
/// used by the reference implementation.
fn legacy_pr(u: usize, eta: f64) -> f64 {
    if u == 0 {
        return (-eta).exp();
    }
    let uf = u as f64;
    (1..=u)
        .map(|l| {
            let lf = l as f64;
            (-eta - uf * std::f64::consts::LN_2 + lf * eta.ln() - ln_gamma(lf + 1.0)
                + ln_gamma(uf)
                - ln_gamma(lf)
                - ln_gamma(uf - lf + 1.0))
            .exp()
        })
        .sum()
}

/// Class probabilities from the approximation formula.
pub fn overlap_legacy_probs(m: usize, window: usize) -> Vec<f64> {
    let lambda = (window - m + 1) as f64 / 2f64.powi(m as i32);
    let eta = lambda / 2.0;
    let mut probs: Vec<f64> = (0..OVERLAP_K).map(|u| legacy_pr(u, eta)).collect();
    let sum: f64 = probs.iter().sum();
    probs.push(1.0 - sum);
    probs
}

/// Exact counts of `window`-bit strings by number of overlapping
/// occurrences of the all-ones template of length `m` (classes 0..4, >=5).
/// Exact for `window < 128`.
pub fn overlap_occurrence_counts(m: usize, window: usize) -> Vec<u128> {
    assert!(window < 128 && m >= 1);
    // state[run][count]: run = trailing ones capped at m, count capped at K
    let mut state = vec![[0u128; OVERLAP_CLASSES]; m + 1];
    state[0][0] = 1;
    for _ in 0..window {
        let mut next = vec![[0u128; OVERLAP_CLASSES]; m + 1];
        for (run, counts) in state.iter().enumerate() {
            for (c, &ways) in counts.iter().enumerate() {
                if ways == 0 {
                    continue;
                }
                next[0][c] += ways;
                let run1 = (run + 1).min(m);
                let c1 = if run + 1 >= m { (c + 1).min(OVERLAP_K) } else { c };
                next[run1][c1] += ways;
            }
        }
        state = next;
    }
    let mut out = vec![0u128; OVERLAP_CLASSES];
    for counts in &state {
        for (o, c) in out.iter_mut().zip(counts) {
            *o += c;
        }
    }
    out
}

/// Exact class probabilities for any window length, by the same automaton
/// carried in floating point.
pub fn overlap_occurrence_probs(m: usize, window: usize) -> Vec<f64> {
    let mut state = vec![[0f64; OVERLAP_CLASSES]; m + 1];
    state[0][0] = 1.0;
    for _ in 0..window {
        let mut next = vec![[0f64; OVERLAP_CLASSES]; m + 1];
        for (run, counts) in state.iter().enumerate() {
            for (c, &p) in counts.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let half = 0.5 * p;
                next[0][c] += half;
                let run1 = (run + 1).min(m);
                let c1 = if run + 1 >= m { (c + 1).min(OVERLAP_K) } else { c };
                next[run1][c1] += half;
            }
        }
        state = next;
    }
    let mut out = vec![0f64; OVERLAP_CLASSES];
    for counts in &state {
        for (o, c) in out.iter_mut().zip(counts) {
            *o += c;
        }
    }
    out
}

/// Overlapping template test parameters (all-ones template).
#[derive(Debug, Clone)]
pub struct Overlapping {
    pub m: usize,
    pub window: usize,
    probs: Vec<f64>,
}

impl Overlapping {
    pub const STANDARD_M: usize = 9;
    pub const STANDARD_WINDOW: usize = 1032;

    pub fn new(m: usize, window: usize, variant: Variant) -> Result<Self> {
        if m == 0 || m > window {
            return config(format!("overlapping template: invalid m={m}, M={window}"));
        }
        let probs = match variant {
            Variant::Original => overlap_legacy_probs(m, window),
            Variant::Modified => overlap_occurrence_probs(m, window),
        };
        Ok(Self { m, window, probs })
    }

    pub fn standard(variant: Variant) -> Result<Self> {
        Self::new(Self::STANDARD_M, Self::STANDARD_WINDOW, variant)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pvalue(&self, bits: &[u8]) -> Result<f64> {
        require_bits(self.window, bits.len())?;
        let blocks = bits.len() / self.window;
        let mut nu = [0u64; OVERLAP_CLASSES];
        for block in bits.chunks_exact(self.window) {
            let mut run = 0usize;
            let mut hits = 0usize;
            for &b in block {
                if b == 1 {
                    run += 1;
                    if run >= self.m {
                        hits += 1;
                    }
                } else {
                    run = 0;
                }
            }
            nu[hits.min(OVERLAP_K)] += 1;
        }
        let n = blocks as f64;
        let chi2: f64 = nu
            .iter()
            .zip(&self.probs)
            .map(|(&o, &p)| (o as f64 - n * p).powi(2) / (n * p))
            .sum();
        igamc(OVERLAP_K as f64 / 2.0, chi2 / 2.0)
    }
}
