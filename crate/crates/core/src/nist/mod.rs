//! First-level tests from the NIST statistical test suite.

mod basic;
mod dft;
mod entropy;
mod excursions;
mod linear_complexity;
mod longest_run;
mod rank;
mod template;
mod universal;

pub use basic::{block_frequency, cumulative_sums, frequency, runs};
pub use dft::{dft_statistic, dft_test, dft_with_plan, variant_d, DftPlan, D_MODIFIED, D_ORIGINAL};
pub use entropy::{approximate_entropy, cyclic_pattern_counts, serial};
pub use excursions::{
    cycle_count, pi_k, random_excursions, random_excursions_test, random_excursions_variant,
    random_excursions_variant_test, walk_summary, WalkSummary, EXCURSION_STATES, VARIANT_STATES,
};
pub use linear_complexity::{berlekamp_massey, linear_complexity};
pub use longest_run::{
    count_longest_at_most, longest_run_class_counts, longest_run_class_probs, longest_run_test,
    longest_run_with, prob_longest_at_most, standard_config, variant_probs, RunClasses,
};
pub use rank::{gf2_rank, rank, rank_probability};
pub use template::{
    aperiodic_templates, is_aperiodic, overlap_legacy_probs, overlap_occurrence_counts,
    overlap_occurrence_probs, NonOverlapping, Overlapping, OVERLAP_CLASSES,
};
pub use universal::{
    block_len_for, coron_g, coron_mean, coron_var, harmonic, log2_gap_mean, universal_test,
    Universal,
};

use crate::bitstream::BitBlock;
use crate::descriptor::{TestDescriptor, TestId, TestOutcome};
use crate::error::{config, Error, Result};

/// Apply one NIST test to a block of exactly `desc.n` bits.
///
/// Convenience entry point; batch runs go through `suite::prepare`, which
/// builds the per-descriptor tables once.
pub fn run_standard_test(desc: &TestDescriptor, block: &BitBlock) -> Result<TestOutcome> {
    if block.len() as u64 != desc.n {
        return Err(Error::InsufficientInput {
            requested: desc.n,
            available: block.len() as u64,
        });
    }
    let bits = block.bits();
    let p = &desc.params;
    let out = match desc.id {
        TestId::Frequency => TestOutcome::single(frequency(bits)?),
        TestId::BlockFrequency => TestOutcome::single(block_frequency(bits, p.block_frequency_m)?),
        TestId::CumulativeSums => TestOutcome::values(cumulative_sums(bits)?.to_vec()),
        TestId::Runs => TestOutcome::single(runs(bits)?),
        TestId::LongestRun => TestOutcome::single(longest_run_test(bits, desc.variant)?),
        TestId::Rank => TestOutcome::single(rank(bits)?),
        TestId::Dft => TestOutcome::single(dft_test(bits, variant_d(desc.variant))?),
        TestId::NonOverlappingTemplate => TestOutcome::values(
            NonOverlapping::new(p.template_len, p.template_blocks)?.pvalues(bits)?,
        ),
        TestId::OverlappingTemplate => {
            TestOutcome::single(Overlapping::standard(desc.variant)?.pvalue(bits)?)
        }
        TestId::Universal => TestOutcome::single(universal_test(bits, desc.variant)?),
        TestId::ApproximateEntropy => TestOutcome::single(approximate_entropy(bits, p.apen_m)?),
        TestId::Serial => TestOutcome::values(serial(bits, p.serial_m)?.to_vec()),
        TestId::LinearComplexity => TestOutcome::single(linear_complexity(bits, p.lc_block)?),
        TestId::RandomExcursions => random_excursions_test(bits, p.j_min)?,
        TestId::RandomExcursionsVariant => random_excursions_variant_test(bits, p.j_min)?,
        other => return config(format!("{other} is not a bit-block test")),
    };
    Ok(out)
}
