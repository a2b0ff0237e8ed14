//! Two- and three-level meta-tests over a level-1 test.
//!
//! Three-level run: `N'` batches of `N` level-1 applications. Level 2 counts
//! the p-values `>= alpha` in each batch; level 3 compares the `N'` counts
//! with `B(N, 1 - alpha)` by a χ² test over a [`Categorization`].
//!
//! Application `slot` of batch `b` reads stream `b * N + slot` of the
//! source, so results do not depend on how slots are scheduled across
//! threads. A discarded application is retried on the same stream with
//! fresh bits. File sources have a single stream and are read sequentially.

mod categorize;

use rayon::prelude::*;

pub use categorize::{build_categories, Categorization};

use crate::bitstream::{BitSource, SourceSpec};
use crate::descriptor::TestOutcome;
use crate::error::{Error, Result};
use crate::numerics::{chi2_log10_sf, ReportedP};
use crate::suite::Level1Test;

/// Attempts per slot before the run is declared inapplicable.
pub const MAX_ATTEMPTS_PER_SLOT: u32 = 1000;
/// Discard fraction within one batch above which the run is aborted.
pub const MAX_DISCARD_RATE: f64 = 0.99;

/// Number of p-values `>= alpha`.
pub fn level2_count(pvalues: &[f64], alpha: f64) -> Result<u64> {
    let mut t = 0;
    for &p in pvalues {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Consistency(format!("level-1 p-value {p} outside [0, 1]")));
        }
        if p >= alpha {
            t += 1;
        }
    }
    Ok(t)
}

/// Level-3 statistic for counts `ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct Level3 {
    /// Number of counts in each category.
    pub y: Vec<u64>,
    pub h: f64,
    pub df: usize,
    pub pvalue3: ReportedP,
}

pub fn level3_gof(ts: &[u64], cat: &Categorization) -> Result<Level3> {
    let mut y = vec![0u64; cat.len()];
    for &t in ts {
        let i = cat
            .index_of(t)
            .ok_or_else(|| Error::Consistency(format!("level-2 count {t} outside the categories")))?;
        y[i] += 1;
    }
    let n_prime = ts.len() as f64;
    let h = y
        .iter()
        .zip(&cat.probs)
        .map(|(&obs, &p)| {
            let e = n_prime * p;
            (obs as f64 - e).powi(2) / e
        })
        .sum();
    let df = cat.df();
    Ok(Level3 {
        y,
        h,
        df,
        pvalue3: ReportedP::from_log10(chi2_log10_sf(df, h)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeLevelConfig {
    /// Level-1 applications per batch.
    pub n: u64,
    /// Number of batches.
    pub n_prime: u64,
    pub alpha: f64,
    pub min_expect: f64,
}

impl ThreeLevelConfig {
    pub fn new(n: u64, n_prime: u64, alpha: f64) -> Self {
        Self {
            n,
            n_prime,
            alpha,
            min_expect: 5.0,
        }
    }
}

/// Level-2 and level-3 results for one statistic of a test.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticReport {
    pub index: usize,
    pub label: String,
    /// Level-2 counts, one per batch.
    pub t: Vec<u64>,
    pub level3: Level3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessReport {
    pub config: ThreeLevelConfig,
    pub categories: Categorization,
    pub statistics: Vec<StatisticReport>,
    /// Level-1 applications discarded and retried.
    pub discard_count: u64,
}

/// The p-values of one successful application and the discards before it.
struct SlotResult {
    pvalues: Vec<f64>,
    discards: u64,
}

fn run_slot(test: &dyn Level1Test, source: &mut BitSource) -> Result<SlotResult> {
    let mut discards = 0u64;
    for _ in 0..MAX_ATTEMPTS_PER_SLOT {
        let TestOutcome {
            pvalues,
            discard_reason,
        } = test.apply(source)?;
        if discard_reason.is_none() {
            if pvalues.len() != test.arity() {
                return Err(Error::Consistency(format!(
                    "{} returned {} p-values, expected {}",
                    test.descriptor().id,
                    pvalues.len(),
                    test.arity()
                )));
            }
            return Ok(SlotResult { pvalues, discards });
        }
        discards += 1;
    }
    Err(Error::Inapplicable(format!(
        "{}: {MAX_ATTEMPTS_PER_SLOT} consecutive applications discarded",
        test.descriptor().id
    )))
}

/// Runs `n` applications for batch `batch`: in parallel over streams for
/// splittable sources, sequentially on `shared` otherwise.
fn run_batch(
    test: &dyn Level1Test,
    spec: &SourceSpec,
    shared: Option<&mut BitSource>,
    batch: u64,
    n: u64,
) -> Result<Vec<SlotResult>> {
    match shared {
        Some(source) => (0..n).map(|_| run_slot(test, source)).collect(),
        None => (0..n)
            .into_par_iter()
            .map(|slot| {
                let mut source = spec.open(batch * n + slot)?;
                run_slot(test, &mut source)
            })
            .collect(),
    }
}

fn check_discard_rate(test: &dyn Level1Test, kept: u64, discarded: u64) -> Result<()> {
    let rate = discarded as f64 / (kept + discarded) as f64;
    if rate > MAX_DISCARD_RATE {
        return Err(Error::Inapplicable(format!(
            "{}: {discarded} of {} applications discarded in one batch",
            test.descriptor().id,
            kept + discarded
        )));
    }
    Ok(())
}

/// Three-level test of `test` on `spec`. `on_batch` is called after each
/// batch with its index.
pub fn run_three_level(
    test: &dyn Level1Test,
    spec: &SourceSpec,
    cfg: &ThreeLevelConfig,
    on_batch: Option<&(dyn Fn(u64) + Sync)>,
) -> Result<HarnessReport> {
    if cfg.n == 0 || cfg.n_prime == 0 {
        return Err(Error::Config("N and N' must be positive".into()));
    }
    let categories = build_categories(cfg.n, cfg.alpha, cfg.n_prime, cfg.min_expect)?;
    let arity = test.arity();
    let mut ts = vec![Vec::with_capacity(cfg.n_prime as usize); arity];
    let mut discard_count = 0u64;
    let mut shared = if spec.is_splittable() { None } else { Some(spec.open(0)?) };
    let mut column = Vec::with_capacity(cfg.n as usize);
    for batch in 0..cfg.n_prime {
        let slots = run_batch(test, spec, shared.as_mut(), batch, cfg.n)?;
        let discarded: u64 = slots.iter().map(|s| s.discards).sum();
        check_discard_rate(test, cfg.n, discarded)?;
        discard_count += discarded;
        for (stat, t) in ts.iter_mut().enumerate() {
            column.clear();
            column.extend(slots.iter().map(|s| s.pvalues[stat]));
            t.push(level2_count(&column, cfg.alpha)?);
        }
        if let Some(f) = on_batch {
            f(batch);
        }
    }
    let desc = test.descriptor();
    let statistics = ts
        .into_iter()
        .enumerate()
        .map(|(index, t)| {
            Ok(StatisticReport {
                index,
                label: desc.statistic_label(index),
                level3: level3_gof(&t, &categories)?,
                t,
            })
        })
        .collect::<Result<_>>()?;
    Ok(HarnessReport {
        config: cfg.clone(),
        categories,
        statistics,
        discard_count,
    })
}

/// Number of equal-width bins for the level-2 uniformity test.
pub const TWO_LEVEL_BINS: usize = 10;

/// χ² uniformity test of p-values over ten equal bins of `[0, 1]` (df 9).
pub fn uniformity_gof(pvalues: &[f64]) -> Result<(f64, ReportedP)> {
    let mut bins = [0u64; TWO_LEVEL_BINS];
    for &p in pvalues {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Consistency(format!("p-value {p} outside [0, 1]")));
        }
        bins[((p * TWO_LEVEL_BINS as f64) as usize).min(TWO_LEVEL_BINS - 1)] += 1;
    }
    let e = pvalues.len() as f64 / TWO_LEVEL_BINS as f64;
    let chi2 = bins.iter().map(|&b| (b as f64 - e).powi(2) / e).sum();
    Ok((chi2, ReportedP::from_log10(chi2_log10_sf(TWO_LEVEL_BINS - 1, chi2)?)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelReport {
    /// One `(label, chi2, p-value)` per statistic.
    pub statistics: Vec<(String, f64, ReportedP)>,
    pub discard_count: u64,
}

/// Two-level test: `n` level-1 p-values from streams `0..n`, then
/// [`uniformity_gof`] per statistic.
pub fn run_two_level(test: &dyn Level1Test, spec: &SourceSpec, n: u64) -> Result<TwoLevelReport> {
    if n == 0 {
        return Err(Error::Config("N must be positive".into()));
    }
    let mut shared = if spec.is_splittable() { None } else { Some(spec.open(0)?) };
    let slots = run_batch(test, spec, shared.as_mut(), 0, n)?;
    let discard_count = slots.iter().map(|s| s.discards).sum();
    check_discard_rate(test, n, discard_count)?;
    let desc = test.descriptor();
    let statistics = (0..test.arity())
        .map(|stat| {
            let column: Vec<f64> = slots.iter().map(|s| s.pvalues[stat]).collect();
            let (chi2, p) = uniformity_gof(&column)?;
            Ok((desc.statistic_label(stat), chi2, p))
        })
        .collect::<Result<_>>()?;
    Ok(TwoLevelReport {
        statistics,
        discard_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{TestDescriptor, TestId, Variant};
    use crate::numerics::chi2_sf;
    use crate::suite::prepare;

    /// Always reports the same p-value.
    struct Constant {
        desc: TestDescriptor,
        p: f64,
    }

    impl Level1Test for Constant {
        fn descriptor(&self) -> &TestDescriptor {
            &self.desc
        }
        fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
            source.next_bit()?;
            Ok(TestOutcome::single(self.p))
        }
    }

    /// Discards unless the first bit read is 1.
    struct Picky {
        desc: TestDescriptor,
        need_ones: u32,
    }

    impl Level1Test for Picky {
        fn descriptor(&self) -> &TestDescriptor {
            &self.desc
        }
        fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
            let mut ok = true;
            for _ in 0..self.need_ones {
                ok &= source.next_bit()? == 1;
            }
            if ok {
                Ok(TestOutcome::single(source.uniform01()?))
            } else {
                Ok(TestOutcome::discarded_for(0, 1))
            }
        }
    }

    fn identity() -> Box<dyn Level1Test> {
        prepare(&TestDescriptor::new(TestId::Identity, 1, Variant::Original)).unwrap()
    }

    #[test]
    fn level2_counts() {
        assert_eq!(level2_count(&[0.005, 0.5, 0.99], 0.01).unwrap(), 2);
        assert_eq!(level2_count(&vec![1.0; 1000], 0.01).unwrap(), 1000);
        assert_eq!(level2_count(&[0.01], 0.01).unwrap(), 1);
        assert!(level2_count(&[1.5], 0.01).is_err());
        assert!(level2_count(&[f64::NAN], 0.01).is_err());
    }

    #[test]
    fn level3_exact_expectations() {
        // N' = 1024 and B(10, 1/2): expected counts are the binomial coefficients
        let cat = Categorization {
            categories: (0..=10).map(|j| j..=j).collect(),
            probs: (0..=10u64)
                .map(|j| {
                    let c: u64 = (0..j).fold(1, |acc, i| acc * (10 - i) / (i + 1));
                    c as f64 / 1024.0
                })
                .collect(),
        };
        let mut ts = Vec::new();
        for j in 0..=10u64 {
            let c: u64 = (0..j).fold(1, |acc, i| acc * (10 - i) / (i + 1));
            ts.extend(std::iter::repeat_n(j, c as usize));
        }
        let l3 = level3_gof(&ts, &cat).unwrap();
        assert_eq!(l3.h, 0.0);
        assert_eq!(l3.pvalue3.value, 1.0);
    }

    #[test]
    fn level3_all_in_lowest_category() {
        let cat = build_categories(1000, 0.01, 1000, 5.0).unwrap();
        let ts = vec![500u64; 1000];
        let l3 = level3_gof(&ts, &cat).unwrap();
        let p0 = cat.probs[0];
        let expected = 1000.0 * (1.0 - p0).powi(2) / p0 + cat.probs[1..].iter().sum::<f64>() * 1000.0;
        assert!((l3.h - expected).abs() < 1e-9 * expected);
        assert_eq!(l3.df, 16);
        assert_eq!(l3.y[0], 1000);
    }

    #[test]
    fn pvalue3_decreases_with_h() {
        let mut last = 1.0;
        for h in [0.0, 5.0, 16.0, 30.0, 100.0, 1000.0] {
            let p = chi2_sf(16, h).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn identity_null_calibration() {
        let spec = SourceSpec::mt19937(vec![0x01]).unwrap();
        let cfg = ThreeLevelConfig::new(100, 200, 0.01);
        let r = run_three_level(identity().as_ref(), &spec, &cfg, None).unwrap();
        assert_eq!(r.statistics.len(), 1);
        assert_eq!(r.statistics[0].t.len(), 200);
        assert_eq!(r.statistics[0].level3.y.iter().sum::<u64>(), 200);
        assert!(r.statistics[0].level3.pvalue3.value > 1e-6);
        assert_eq!(r.discard_count, 0);
    }

    #[test]
    fn counts_follow_the_binomial() {
        // 10^4 batches of identity p-values; T should look like B(100, 0.99)
        let spec = SourceSpec::sha1(vec![0x77]).unwrap();
        let cfg = ThreeLevelConfig::new(100, 10_000, 0.01);
        let r = run_three_level(identity().as_ref(), &spec, &cfg, None).unwrap();
        assert!(r.statistics[0].level3.pvalue3.value > 1e-6, "{:?}", r.statistics[0].level3);
    }

    #[test]
    fn constant_pvalue_is_eps() {
        let spec = SourceSpec::mt19937(vec![2]).unwrap();
        let test = Constant {
            desc: TestDescriptor::new(TestId::Identity, 1, Variant::Original),
            p: 0.5,
        };
        let cfg = ThreeLevelConfig::new(1000, 1000, 0.01);
        let r = run_three_level(&test, &spec, &cfg, None).unwrap();
        let s = &r.statistics[0];
        assert!(s.t.iter().all(|&t| t == 1000));
        assert!(s.level3.pvalue3.is_eps(), "{:?}", s.level3.pvalue3);
        assert_eq!(*s.level3.y.last().unwrap(), 1000);
    }

    #[test]
    fn discards_are_retried_and_counted() {
        let spec = SourceSpec::mt19937(vec![3]).unwrap();
        let test = Picky {
            desc: TestDescriptor::new(TestId::Identity, 1, Variant::Original),
            need_ones: 2,
        };
        let cfg = ThreeLevelConfig::new(50, 40, 0.01);
        let r = run_three_level(&test, &spec, &cfg, None).unwrap();
        assert!(r.discard_count > 0);
        assert_eq!(r.statistics[0].t.len(), 40);
        // about three discards per kept application
        let per_slot = r.discard_count as f64 / 2000.0;
        assert!((per_slot - 3.0).abs() < 0.5, "{per_slot}");
    }

    #[test]
    fn hopeless_discards_abort() {
        let spec = SourceSpec::mt19937(vec![3]).unwrap();
        let test = Picky {
            desc: TestDescriptor::new(TestId::Identity, 1, Variant::Original),
            need_ones: 12,
        };
        let cfg = ThreeLevelConfig::new(20, 100, 0.01);
        let err = run_three_level(&test, &spec, &cfg, None).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)), "{err}");
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = SourceSpec::mt19937(vec![0xfe]).unwrap();
        let test = Picky {
            desc: TestDescriptor::new(TestId::Identity, 1, Variant::Original),
            need_ones: 1,
        };
        let cfg = ThreeLevelConfig::new(64, 50, 0.05);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_three_level(&test, &spec, &cfg, None).unwrap())
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn file_source_runs_sequentially() {
        let bytes: Vec<u8> = (0..4000u32).map(|i| (i.wrapping_mul(2_654_435_761) >> 13) as u8).collect();
        let spec = SourceSpec::from_bytes(bytes);
        let cfg = ThreeLevelConfig::new(10, 40, 0.3);
        let r = run_three_level(identity().as_ref(), &spec, &cfg, None).unwrap();
        assert_eq!(r.statistics[0].t.len(), 40);
        // 400 uniforms need 1600 bytes; 4000 suffice, 100 do not
        let short = SourceSpec::from_bytes(vec![0u8; 100]);
        assert!(matches!(
            run_three_level(identity().as_ref(), &short, &cfg, None),
            Err(Error::InsufficientInput { .. })
        ));
    }

    #[test]
    fn two_level_uniformity() {
        let centres: Vec<f64> = (0..100).map(|i| (i % 10) as f64 / 10.0 + 0.05).collect();
        let (chi2, p) = uniformity_gof(&centres).unwrap();
        assert_eq!(chi2, 0.0);
        assert_eq!(p.value, 1.0);
        // everything in one bin: chi2 = (N - N/10)^2/(N/10) + 9 (N/10) = 9 N
        let (chi2, p) = uniformity_gof(&vec![0.5; 1000]).unwrap();
        assert!((chi2 - 9000.0).abs() < 1e-9);
        assert!(p.is_eps());
        let spec = SourceSpec::mt19937(vec![9]).unwrap();
        let r = run_two_level(identity().as_ref(), &spec, 1000).unwrap();
        assert!(r.statistics[0].2.value > 1e-6);
    }
}
