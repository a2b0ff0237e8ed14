//! Test identities, parameters and per-application outcomes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which p-value approximation a test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Modified,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Modified => "modified",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" | "orig" => Ok(Variant::Original),
            "modified" | "mod" => Ok(Variant::Modified),
            _ => Err(Error::Config(format!("unknown variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Frequency,
    BlockFrequency,
    CumulativeSums,
    Runs,
    LongestRun,
    Rank,
    Dft,
    NonOverlappingTemplate,
    OverlappingTemplate,
    Universal,
    ApproximateEntropy,
    Serial,
    LinearComplexity,
    RandomExcursions,
    RandomExcursionsVariant,
    SampleCorr,
    StringRun,
    Savir2,
    /// Emits one `uniform01` draw as its p-value; a harness self-check.
    Identity,
}

impl TestId {
    pub const ALL: [TestId; 19] = [
        TestId::Frequency,
        TestId::BlockFrequency,
        TestId::CumulativeSums,
        TestId::Runs,
        TestId::LongestRun,
        TestId::Rank,
        TestId::Dft,
        TestId::NonOverlappingTemplate,
        TestId::OverlappingTemplate,
        TestId::Universal,
        TestId::ApproximateEntropy,
        TestId::Serial,
        TestId::LinearComplexity,
        TestId::RandomExcursions,
        TestId::RandomExcursionsVariant,
        TestId::SampleCorr,
        TestId::StringRun,
        TestId::Savir2,
        TestId::Identity,
    ];

    /// Machine name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            TestId::Frequency => "frequency",
            TestId::BlockFrequency => "block_frequency",
            TestId::CumulativeSums => "cumulative_sums",
            TestId::Runs => "runs",
            TestId::LongestRun => "longest_run",
            TestId::Rank => "rank",
            TestId::Dft => "dft",
            TestId::NonOverlappingTemplate => "non_overlapping_template",
            TestId::OverlappingTemplate => "overlapping_template",
            TestId::Universal => "universal",
            TestId::ApproximateEntropy => "approximate_entropy",
            TestId::Serial => "serial",
            TestId::LinearComplexity => "linear_complexity",
            TestId::RandomExcursions => "random_excursions",
            TestId::RandomExcursionsVariant => "random_excursions_variant",
            TestId::SampleCorr => "sample_corr",
            TestId::StringRun => "string_run",
            TestId::Savir2 => "savir2",
            TestId::Identity => "identity",
        }
    }

    /// Human-readable title for the text report.
    pub fn title(self) -> &'static str {
        match self {
            TestId::Frequency => "Frequency",
            TestId::BlockFrequency => "Block Frequency",
            TestId::CumulativeSums => "Cumulative Sums",
            TestId::Runs => "Runs",
            TestId::LongestRun => "Longest Run of Ones",
            TestId::Rank => "Binary Matrix Rank",
            TestId::Dft => "Discrete Fourier Transform",
            TestId::NonOverlappingTemplate => "Non-overlapping Template",
            TestId::OverlappingTemplate => "Overlapping Template",
            TestId::Universal => "Maurer's Universal",
            TestId::ApproximateEntropy => "Approximate Entropy",
            TestId::Serial => "Serial",
            TestId::LinearComplexity => "Linear Complexity",
            TestId::RandomExcursions => "Random Excursions",
            TestId::RandomExcursionsVariant => "Random Excursions Variant",
            TestId::SampleCorr => "SampleCorr",
            TestId::StringRun => "sstring_Run",
            TestId::Savir2 => "Savir2",
            TestId::Identity => "Identity",
        }
    }

    /// Whether the test has distinct original and modified approximations.
    pub fn has_variants(self) -> bool {
        matches!(
            self,
            TestId::LongestRun
                | TestId::Dft
                | TestId::OverlappingTemplate
                | TestId::Universal
                | TestId::SampleCorr
                | TestId::StringRun
        )
    }

    /// Whether a block may be rejected as inapplicable (and replaced).
    pub fn may_discard(self) -> bool {
        matches!(self, TestId::RandomExcursions | TestId::RandomExcursionsVariant)
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        TestId::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown test '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavirParams {
    /// Range of the first draw, `I_1` uniform on `1..=m`.
    pub m: u64,
    /// Number of chained draws per sample.
    pub t: usize,
    /// Cells with expected count below this are merged.
    pub merge_threshold: f64,
}

impl Default for SavirParams {
    fn default() -> Self {
        Self {
            m: 1 << 20,
            t: 9,
            merge_threshold: 5.0,
        }
    }
}

/// Parameters shared by all tests; each test reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub block_frequency_m: usize,
    pub template_len: u32,
    pub template_blocks: usize,
    pub apen_m: u32,
    pub serial_m: u32,
    pub lc_block: usize,
    pub j_min: u64,
    pub corr_lag: usize,
    /// Number of run-length classes; `None` picks it from `n`.
    pub run_k: Option<usize>,
    pub savir: SavirParams,
}

impl Default for TestParams {
    fn default() -> Self {
        Self {
            block_frequency_m: 128,
            template_len: 9,
            template_blocks: 8,
            apen_m: 10,
            serial_m: 16,
            lc_block: 500,
            j_min: 500,
            corr_lag: 1,
            run_k: None,
            savir: SavirParams::default(),
        }
    }
}

/// A fully specified level-1 test: which test, on how much input, with
/// which approximation.
///
/// `n` counts bits for the bit-oriented tests, uniforms for SampleCorr,
/// runs for StringRun and samples for Savir2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDescriptor {
    pub id: TestId,
    pub n: u64,
    pub variant: Variant,
    pub params: TestParams,
}

impl TestDescriptor {
    pub fn new(id: TestId, n: u64, variant: Variant) -> Self {
        Self {
            id,
            n,
            variant,
            params: TestParams::default(),
        }
    }

    pub fn with_params(mut self, params: TestParams) -> Self {
        self.params = params;
        self
    }

    /// Number of p-values one application produces.
    pub fn arity(&self) -> usize {
        match self.id {
            TestId::CumulativeSums | TestId::Serial | TestId::StringRun => 2,
            TestId::NonOverlappingTemplate => crate::nist::aperiodic_templates(self.params.template_len).len(),
            TestId::RandomExcursions => 8,
            TestId::RandomExcursionsVariant => 18,
            _ => 1,
        }
    }

    /// Label for statistic `index` of a multi-valued test.
    pub fn statistic_label(&self, index: usize) -> String {
        match self.id {
            TestId::CumulativeSums => ["forward", "backward"][index].to_string(),
            TestId::Serial => ["p1", "p2"][index].to_string(),
            TestId::StringRun => ["normal", "chi2"][index].to_string(),
            TestId::NonOverlappingTemplate => {
                let t = crate::nist::aperiodic_templates(self.params.template_len)[index];
                format!("{:0width$b}", t, width = self.params.template_len as usize)
            }
            TestId::RandomExcursions => format!("x={:+}", crate::nist::EXCURSION_STATES[index]),
            TestId::RandomExcursionsVariant => {
                format!("x={:+}", crate::nist::VARIANT_STATES[index])
            }
            _ => String::new(),
        }
    }
}

/// Why an application produced no p-values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscardReason {
    /// Observed number of random-walk cycles.
    pub j: u64,
    pub j_min: u64,
}

/// Result of one level-1 application. Empty `pvalues` iff discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub pvalues: Vec<f64>,
    pub discard_reason: Option<DiscardReason>,
}

impl TestOutcome {
    pub fn values(pvalues: Vec<f64>) -> Self {
        Self {
            pvalues,
            discard_reason: None,
        }
    }

    pub fn single(p: f64) -> Self {
        Self::values(vec![p])
    }

    pub fn discarded_for(j: u64, j_min: u64) -> Self {
        Self {
            pvalues: Vec::new(),
            discard_reason: Some(DiscardReason { j, j_min }),
        }
    }

    pub fn discarded(&self) -> bool {
        self.discard_reason.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in TestId::ALL {
            assert_eq!(id.name().parse::<TestId>().unwrap(), id);
        }
        assert_eq!("Block-Frequency".parse::<TestId>().unwrap(), TestId::BlockFrequency);
        assert!("nope".parse::<TestId>().is_err());
        assert_eq!("mod".parse::<Variant>().unwrap(), Variant::Modified);
    }

    #[test]
    fn arities() {
        let a = |id| TestDescriptor::new(id, 1000, Variant::Original).arity();
        assert_eq!(a(TestId::NonOverlappingTemplate), 148);
        assert_eq!(a(TestId::RandomExcursions), 8);
        assert_eq!(a(TestId::RandomExcursionsVariant), 18);
        assert_eq!(a(TestId::Serial), 2);
        assert_eq!(a(TestId::Frequency), 1);
        let d = TestDescriptor::new(TestId::NonOverlappingTemplate, 1000, Variant::Original);
        assert_eq!(d.statistic_label(0), "000000001");
        let d = TestDescriptor::new(TestId::RandomExcursions, 1000, Variant::Original);
        assert_eq!(d.statistic_label(0), "x=-4");
    }
}
