//! Frequency, block frequency, cumulative sums and runs.

use crate::error::{config, require_bits, Result};
use crate::numerics::{erfc, igamc, normal_sf};

/// Monobit frequency test.
pub fn frequency(bits: &[u8]) -> Result<f64> {
    require_bits(1, bits.len())?;
    let n = bits.len() as f64;
    let ones = bits.iter().map(|&b| i64::from(b)).sum::<i64>();
    let sum = 2 * ones - bits.len() as i64;
    let s_obs = (sum as f64).abs() / n.sqrt();
    erfc(s_obs / std::f64::consts::SQRT_2)
}

/// Frequency within blocks of `block_len` bits.
pub fn block_frequency(bits: &[u8], block_len: usize) -> Result<f64> {
    if block_len == 0 {
        return config("block frequency: block length must be positive");
    }
    require_bits(block_len, bits.len())?;
    let blocks = bits.len() / block_len;
    let chi2: f64 = bits
        .chunks_exact(block_len)
        .map(|block| {
            let ones = block.iter().map(|&b| u32::from(b)).sum::<u32>();
            let pi = f64::from(ones) / block_len as f64 - 0.5;
            pi * pi
        })
        .sum::<f64>()
        * 4.0
        * block_len as f64;
    igamc(blocks as f64 / 2.0, chi2 / 2.0)
}

/// Cumulative sums, forward then backward. Returns both p-values.
pub fn cumulative_sums(bits: &[u8]) -> Result<[f64; 2]> {
    require_bits(1, bits.len())?;
    let n = bits.len() as i64;
    let max_excursion = |iter: &mut dyn Iterator<Item = &u8>| {
        let mut s = 0i64;
        let mut z = 0i64;
        for &b in iter {
            s += 2 * i64::from(b) - 1;
            z = z.max(s.abs());
        }
        z
    };
    let forward = max_excursion(&mut bits.iter());
    let backward = max_excursion(&mut bits.iter().rev());
    Ok([cusum_pvalue(n, forward)?, cusum_pvalue(n, backward)?])
}

/// Tail of the maximal excursion of a random walk of length `n`. The index
/// ranges use C integer division (truncation toward zero), matching the
/// reference implementation.
pub(crate) fn cusum_pvalue(n: i64, z: i64) -> Result<f64> {
    let z = z.max(1);
    let sqrt_n = (n as f64).sqrt();
    let phi = |x: f64| -> Result<f64> { Ok(1.0 - normal_sf(x)?) };
    let mut sum1 = 0.0;
    let mut k = (-n / z + 1) / 4;
    while k <= (n / z - 1) / 4 {
        sum1 += phi(((4 * k + 1) * z) as f64 / sqrt_n)?;
        sum1 -= phi(((4 * k - 1) * z) as f64 / sqrt_n)?;
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = (-n / z - 3) / 4;
    while k <= (n / z - 1) / 4 {
        sum2 += phi(((4 * k + 3) * z) as f64 / sqrt_n)?;
        sum2 -= phi(((4 * k + 1) * z) as f64 / sqrt_n)?;
        k += 1;
    }
    Ok((1.0 - sum1 + sum2).clamp(0.0, 1.0))
}

/// Runs test. Returns 0 when the prerequisite frequency check fails.
pub fn runs(bits: &[u8]) -> Result<f64> {
    require_bits(2, bits.len())?;
    let n = bits.len() as f64;
    let ones = bits.iter().map(|&b| u64::from(b)).sum::<u64>();
    let pi = ones as f64 / n;
    let tau = 2.0 / n.sqrt();
    if (pi - 0.5).abs() >= tau {
        return Ok(0.0);
    }
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let expected = 2.0 * n * pi * (1.0 - pi);
    let arg = (v_obs as f64 - expected).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi));
    erfc(arg)
}
