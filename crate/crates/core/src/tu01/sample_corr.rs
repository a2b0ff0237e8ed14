//! Lag-`k` serial correlation of uniforms.
//!
//! `original`: `(1/(n-k)) Σ (X_j X_{j+k} - 1/4)`, scaled by `sqrt(12 (n-k))`.
//! `modified`: `(1/(n-k)) Σ (X_j - 1/2)(X_{j+k} - 1/2)`, scaled by
//! `12 sqrt(n-k)`, the exact null standard deviation of the centred sum.
//! Both give a two-sided normal p-value.

use std::collections::VecDeque;

use crate::bitstream::BitSource;
use crate::descriptor::Variant;
use crate::error::{config, Result};
use crate::numerics::normal_two_sided;

/// Streaming accumulator over a sequence of uniforms.
#[derive(Debug, Clone)]
pub struct SampleCorr {
    lag: usize,
    variant: Variant,
    window: VecDeque<f64>,
    sum: f64,
    terms: u64,
}

impl SampleCorr {
    pub fn new(lag: usize, variant: Variant) -> Result<Self> {
        if lag == 0 {
            return config("sample correlation lag must be at least 1");
        }
        Ok(Self {
            lag,
            variant,
            window: VecDeque::with_capacity(lag),
            sum: 0.0,
            terms: 0,
        })
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if self.window.len() == self.lag {
            let old = self.window.pop_front().expect("window is full");
            self.sum += match self.variant {
                Variant::Original => old * x - 0.25,
                Variant::Modified => (old - 0.5) * (x - 0.5),
            };
            self.terms += 1;
        }
        self.window.push_back(x);
    }

    /// The mean of the lag products, or an error if fewer than `k + 1`
    /// values were pushed.
    pub fn statistic(&self) -> Result<f64> {
        if self.terms == 0 {
            return config("sample correlation needs n > k values");
        }
        Ok(self.sum / self.terms as f64)
    }

    pub fn z(&self) -> Result<f64> {
        let stat = self.statistic()?;
        let m = self.terms as f64;
        Ok(match self.variant {
            Variant::Original => stat * (12.0 * m).sqrt(),
            Variant::Modified => stat * 12.0 * m.sqrt(),
        })
    }

    pub fn pvalue(&self) -> Result<f64> {
        normal_two_sided(self.z()?)
    }
}

pub fn sample_corr_statistic(reals: &[f64], lag: usize, variant: Variant) -> Result<f64> {
    let mut acc = SampleCorr::new(lag, variant)?;
    reals.iter().for_each(|&x| acc.push(x));
    acc.statistic()
}

pub fn sample_corr_test(reals: &[f64], lag: usize, variant: Variant) -> Result<f64> {
    let mut acc = SampleCorr::new(lag, variant)?;
    reals.iter().for_each(|&x| acc.push(x));
    acc.pvalue()
}

/// Reads `n` uniforms from `source`.
pub fn sample_corr_from_source(
    source: &mut BitSource,
    n: u64,
    lag: usize,
    variant: Variant,
) -> Result<f64> {
    if n <= lag as u64 {
        return config(format!("sample correlation needs n > k (n={n}, k={lag})"));
    }
    let mut acc = SampleCorr::new(lag, variant)?;
    for _ in 0..n {
        acc.push(source.uniform01()?);
    }
    acc.pvalue()
}
