//! Savir's chained-uniform test.
//!
//! `I_1 = floor(m U_1) + 1` and `I_s = floor(I_{s-1} U_s) + 1`; the empirical
//! distribution of `I_t` over `n` samples is compared with its exact law by
//! a χ² test. Cells are merged from the large-value tail until each merged
//! cell expects at least `merge_threshold` samples.

use crate::bitstream::BitSource;
use crate::descriptor::SavirParams;
use crate::error::{config, Result};
use crate::numerics::chi2_sf;

/// Exact distribution of `I_t`; entry `j - 1` is `P(I_t = j)`.
pub fn savir2_cell_probs(m: u64, t: usize) -> Result<Vec<f64>> {
    if m < 2 || t == 0 {
        return config(format!("savir2: need m >= 2 and t >= 1 (m={m}, t={t})"));
    }
    let m = m as usize;
    let mut probs = vec![1.0 / m as f64; m];
    for _ in 1..t {
        // P(I_s = k) = Σ_{j >= k} P(I_{s-1} = j) / j, a suffix sum
        let mut acc = 0.0;
        for j in (0..m).rev() {
            acc += probs[j] / (j + 1) as f64;
            probs[j] = acc;
        }
    }
    Ok(probs)
}

/// Fixed cell layout for one `(m, t, n)`.
#[derive(Debug, Clone)]
pub struct Savir2 {
    pub params: SavirParams,
    pub n: u64,
    /// Lower end (1-based value) of each merged cell, ascending.
    cell_start: Vec<u64>,
    cell_probs: Vec<f64>,
    /// Cell index for small values, looked up directly.
    lookup: Vec<u32>,
}

impl Savir2 {
    pub fn new(params: SavirParams, n: u64) -> Result<Self> {
        if n == 0 {
            return config("savir2: n must be positive");
        }
        if !(params.merge_threshold > 0.0) {
            return config("savir2: merge threshold must be positive");
        }
        let probs = savir2_cell_probs(params.m, params.t)?;
        let nf = n as f64;
        // walk down from the largest value, closing a cell once it expects enough
        let mut starts_desc: Vec<u64> = Vec::new();
        let mut masses_desc: Vec<f64> = Vec::new();
        let mut mass = 0.0;
        for v in (1..=params.m).rev() {
            mass += probs[v as usize - 1];
            if nf * mass >= params.merge_threshold {
                starts_desc.push(v);
                masses_desc.push(mass);
                mass = 0.0;
            }
        }
        if mass > 0.0 {
            // leftover low-value group joins the cell above it
            match masses_desc.last_mut() {
                Some(last) => {
                    *last += mass;
                    *starts_desc.last_mut().expect("parallel vectors") = 1;
                }
                None => return config("savir2: n too small for even one cell"),
            }
        }
        if starts_desc.len() < 2 {
            return config(format!(
                "savir2: n={n} leaves fewer than two cells with expected count >= {}",
                params.merge_threshold
            ));
        }
        starts_desc.reverse();
        masses_desc.reverse();
        let lookup_len = starts_desc.len().min(params.m as usize);
        let mut lookup = Vec::with_capacity(lookup_len);
        let mut cell = 0u32;
        for v in 1..=lookup_len as u64 {
            while (cell as usize + 1) < starts_desc.len() && starts_desc[cell as usize + 1] <= v {
                cell += 1;
            }
            lookup.push(cell);
        }
        Ok(Self {
            params,
            n,
            cell_start: starts_desc,
            cell_probs: masses_desc,
            lookup,
        })
    }

    pub fn cells(&self) -> usize {
        self.cell_probs.len()
    }

    pub fn cell_probs(&self) -> &[f64] {
        &self.cell_probs
    }

    #[inline]
    fn cell_of(&self, value: u64) -> usize {
        if let Some(&c) = self.lookup.get(value as usize - 1) {
            return c as usize;
        }
        self.cell_start.partition_point(|&s| s <= value) - 1
    }

    /// One sample of `I_t` from `t` uniforms.
    #[inline]
    pub fn draw(&self, source: &mut BitSource) -> Result<u64> {
        let mut i = self.params.m;
        for _ in 0..self.params.t {
            i = (i as f64 * source.uniform01()?) as u64 + 1;
        }
        Ok(i)
    }

    /// χ² p-value for observed per-cell counts.
    pub fn pvalue_from_counts(&self, counts: &[u64]) -> Result<f64> {
        let nf = self.n as f64;
        let chi2: f64 = counts
            .iter()
            .zip(&self.cell_probs)
            .map(|(&o, &p)| (o as f64 - nf * p).powi(2) / (nf * p))
            .sum();
        chi2_sf(self.cells() - 1, chi2)
    }

    pub fn counts_from_values(&self, values: impl IntoIterator<Item = u64>) -> Vec<u64> {
        let mut counts = vec![0u64; self.cells()];
        for v in values {
            counts[self.cell_of(v)] += 1;
        }
        counts
    }

    pub fn run(&self, source: &mut BitSource) -> Result<f64> {
        let mut counts = vec![0u64; self.cells()];
        for _ in 0..self.n {
            counts[self.cell_of(self.draw(source)?)] += 1;
        }
        self.pvalue_from_counts(&counts)
    }
}

pub fn savir2_from_source(source: &mut BitSource, params: SavirParams, n: u64) -> Result<f64> {
    Savir2::new(params, n)?.run(source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::SourceSpec;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn rational_dp(m: u64, t: usize) -> Vec<BigRational> {
        let m_big = BigRational::from_integer(m.into());
        let mut probs = vec![BigRational::one() / m_big; m as usize];
        for _ in 1..t {
            let mut next = vec![BigRational::zero(); m as usize];
            for (k, slot) in next.iter_mut().enumerate() {
                for (j, p) in probs.iter().enumerate().skip(k) {
                    *slot += p / BigRational::from_integer(((j + 1) as u64).into());
                }
            }
            probs = next;
        }
        probs
    }

    #[test]
    fn single_step_is_uniform() {
        let p = savir2_cell_probs(10, 1).unwrap();
        assert!(p.iter().all(|&x| x == 0.1));
    }

    #[test]
    fn m2_t2() {
        assert_eq!(savir2_cell_probs(2, 2).unwrap(), vec![0.75, 0.25]);
    }

    #[test]
    fn m4_t3_matches_rational_dp() {
        let exact = rational_dp(4, 3);
        let probs = savir2_cell_probs(4, 3).unwrap();
        for (e, p) in exact.iter().zip(&probs) {
            assert!((e.to_f64().unwrap() - p).abs() < 1e-15);
        }
    }

    #[test]
    fn normalised_and_monotone() {
        for m in 2..=64 {
            for t in 1..=6 {
                let p = savir2_cell_probs(m, t).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                if t >= 2 {
                    assert!(p.windows(2).all(|w| w[0] >= w[1]), "m={m} t={t}");
                }
            }
        }
        let p = savir2_cell_probs(1 << 20, 30).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(savir2_cell_probs(1, 3).is_err());
    }

    #[test]
    fn cells_expect_enough() {
        let params = SavirParams { m: 1 << 20, t: 9, merge_threshold: 5.0 };
        let s = Savir2::new(params, 100_000).unwrap();
        assert!(s.cell_probs().iter().all(|&p| p * 100_000.0 >= 5.0));
        assert!((s.cell_probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for v in [1u64, 2, 3, 50, 1000, 1 << 20] {
            let c = s.cell_of(v);
            assert!(s.cell_start[c] <= v);
            assert!(c + 1 == s.cells() || s.cell_start[c + 1] > v);
        }
    }

    #[test]
    fn exact_expected_counts_give_p_one() {
        let params = SavirParams { m: 2, t: 2, merge_threshold: 5.0 };
        let s = Savir2::new(params, 400).unwrap();
        assert_eq!(s.pvalue_from_counts(&[300, 100]).unwrap(), 1.0);
        let counts = s.counts_from_values([1, 1, 1, 2]);
        assert_eq!(counts, vec![3, 1]);
    }

    #[test]
    fn mean_chi2_near_df() {
        let params = SavirParams { m: 4, t: 2, merge_threshold: 5.0 };
        let s = Savir2::new(params, 10_000).unwrap();
        let df = (s.cells() - 1) as f64;
        let spec = SourceSpec::mt19937(vec![0x5a]).unwrap();
        let reps = 1000;
        let mut total = 0.0;
        for r in 0..reps {
            let mut src = spec.open(r).unwrap();
            let mut counts = vec![0u64; s.cells()];
            for _ in 0..s.n {
                counts[s.cell_of(s.draw(&mut src).unwrap())] += 1;
            }
            let nf = s.n as f64;
            total += counts
                .iter()
                .zip(s.cell_probs())
                .map(|(&o, &p)| (o as f64 - nf * p).powi(2) / (nf * p))
                .sum::<f64>();
        }
        let mean = total / reps as f64;
        assert!((mean / df - 1.0).abs() < 0.1, "mean chi2 {mean}, df {df}");
    }
}
