//! Tests derived from the TestU01 batteries.

mod sample_corr;
mod savir;
mod string_run;

pub use sample_corr::{sample_corr_from_source, sample_corr_statistic, sample_corr_test, SampleCorr};
pub use savir::{savir2_cell_probs, savir2_from_source, Savir2};
pub use string_run::{default_run_classes, string_run_from_counts, string_run_test, RunCounts};
