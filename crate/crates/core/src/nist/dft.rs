//! Discrete Fourier transform (spectral) test.
//!
//! Counts the moduli `|F_i|`, `i < n/2`, below `h = sqrt(n ln 20)`. The
//! normalised count `(o_h - 0.95 n / 2) / sqrt(0.05 * 0.95 * n / d)` is
//! referred to a standard normal, two-sided. The reference implementation
//! uses `d = 4`; `d = 3.8` is the corrected variance constant for n near 10^6.

use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};

use crate::descriptor::Variant;
use crate::error::{config, require_bits, Result};
use crate::numerics::normal_two_sided;

pub const D_ORIGINAL: f64 = 4.0;
pub const D_MODIFIED: f64 = 3.8;

pub fn variant_d(variant: Variant) -> f64 {
    match variant {
        Variant::Original => D_ORIGINAL,
        Variant::Modified => D_MODIFIED,
    }
}

/// A forward FFT plan for one sequence length.
#[derive(Clone)]
pub struct DftPlan {
    n: usize,
    fft: Arc<dyn RealToComplex<f64>>,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("n", &self.n).finish()
    }
}

impl DftPlan {
    pub fn new(n: usize) -> Result<Self> {
        require_bits(2, n)?;
        if !n.is_multiple_of(2) {
            return config(format!("DFT test needs an even length, got {n}"));
        }
        let fft = RealFftPlanner::new().plan_fft_forward(n);
        Ok(Self { n, fft })
    }

    /// Number of `|F_i|`, `0 <= i < n/2`, strictly below the threshold.
    pub fn count_below_threshold(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.n {
            return config(format!(
                "DFT plan is for {} bits, block has {}",
                self.n,
                bits.len()
            ));
        }
        let mut x: Vec<f64> = bits.iter().map(|&b| 2.0 * f64::from(b) - 1.0).collect();
        let mut spectrum = self.fft.make_output_vec();
        self.fft
            .process(&mut x, &mut spectrum)
            .map_err(|e| crate::Error::Consistency(format!("FFT failed: {e}")))?;
        let x = spectrum;
        let threshold_sq = self.n as f64 * 20f64.ln();
        Ok(x[..self.n / 2]
            .iter()
            .filter(|c| c.norm_sqr() < threshold_sq)
            .count())
    }
}

/// Normalised statistic for a count `o_h` out of `n` bits.
pub fn dft_statistic(o_h: usize, n: usize, d: f64) -> f64 {
    let n = n as f64;
    (o_h as f64 - 0.95 * n / 2.0) / (0.05 * 0.95 * n / d).sqrt()
}

pub fn dft_with_plan(plan: &DftPlan, bits: &[u8], d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return config("DFT variance constant d must be positive");
    }
    let o_h = plan.count_below_threshold(bits)?;
    normal_two_sided(dft_statistic(o_h, bits.len(), d))
}

pub fn dft_test(bits: &[u8], d: f64) -> Result<f64> {
    dft_with_plan(&DftPlan::new(bits.len())?, bits, d)
}
