//! Command-line flags, the optional TOML file, and the resolved run configuration.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use serde::Deserialize;

use rng_audit::bitstream::GeneratorKind;
use rng_audit::descriptor::{TestId, Variant};

use crate::error::CliError;

/// Seed used when none is given.
pub const DEFAULT_SEED: &str = "5eed";
/// Runtime budget for paper-tier runs, in seconds.
pub const DEFAULT_BUDGET_SECS: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Nist,
    SmallcrushSubset,
    CrushSubset,
    Single,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Nist => "nist",
            Suite::SmallcrushSubset => "smallcrush-subset",
            Suite::CrushSubset => "crush-subset",
            Suite::Single => "single",
        }
    }

    /// Tests of a named suite in report order.
    pub fn tests(self) -> Vec<TestId> {
        match self {
            Suite::Nist => NIST_ORDER.to_vec(),
            Suite::SmallcrushSubset | Suite::CrushSubset => {
                vec![TestId::SampleCorr, TestId::StringRun, TestId::Savir2]
            }
            Suite::Single => Vec::new(),
        }
    }
}

/// The bit-oriented tests in table order, excursions last.
pub const NIST_ORDER: [TestId; 15] = [
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
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Desk,
    Paper,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Desk => "desk",
            Tier::Paper => "paper",
        }
    }
}

/// Three-level audit of randomness-test p-values.
#[derive(Debug, Default, Parser)]
#[command(name = "rng-audit", version, about)]
pub struct Args {
    /// Named group of tests.
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Comma-separated test names, e.g. `dft,string_run`.
    #[arg(long, value_delimiter = ',')]
    pub test: Option<Vec<String>>,
    /// Run only this approximation (default: both where they differ).
    #[arg(long)]
    pub variant: Option<String>,
    /// Comma-separated generators: mt19937, sha1 or file:<path>.
    #[arg(long, value_delimiter = ',')]
    pub generator: Option<Vec<String>>,
    /// Master seed as hex digits.
    #[arg(long)]
    pub seed: Option<String>,
    /// Level-1 sample size (bits, uniforms, run pairs or samples).
    #[arg(long)]
    pub n: Option<u64>,
    /// Level-1 applications per batch.
    #[arg(long = "N")]
    pub big_n: Option<u64>,
    /// Number of batches.
    #[arg(long = "Nprime")]
    pub n_prime: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Minimum cycle count for the excursion tests.
    #[arg(long = "Jmin")]
    pub j_min: Option<u64>,
    #[arg(long, env = "RNG_AUDIT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub tier: Option<Tier>,
    /// Output directory for report.jsonl and report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run paper-tier tests even when they exceed the budget.
    #[arg(long)]
    pub force: bool,
    /// Paper-tier runtime budget per test, in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    /// TOML file with defaults for any of these options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain length for Savir2.
    #[arg(long = "savir-t")]
    pub savir_t: Option<usize>,
    /// Range of the first Savir2 draw.
    #[arg(long = "savir-m")]
    pub savir_m: Option<u64>,
    /// Lag for SampleCorr.
    #[arg(long = "corr-k")]
    pub corr_k: Option<usize>,
    /// Run-length classes for sstring_Run.
    #[arg(long = "run-k")]
    pub run_k: Option<usize>,
    /// Print one line per completed batch to stderr.
    #[arg(long)]
    pub progress: bool,
}

/// Keys accepted in the `--config` file; same meaning as the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub suite: Option<Suite>,
    pub test: Option<Vec<String>>,
    pub variant: Option<String>,
    pub generator: Option<Vec<String>>,
    pub seed: Option<String>,
    pub n: Option<u64>,
    #[serde(rename = "N")]
    pub big_n: Option<u64>,
    #[serde(rename = "Nprime")]
    pub n_prime: Option<u64>,
    pub alpha: Option<f64>,
    #[serde(rename = "Jmin")]
    pub j_min: Option<u64>,
    pub threads: Option<usize>,
    pub tier: Option<Tier>,
    pub out: Option<PathBuf>,
    pub force: Option<bool>,
    pub budget: Option<f64>,
    pub savir_t: Option<usize>,
    pub savir_m: Option<u64>,
    pub corr_k: Option<usize>,
    pub run_k: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Everything needed to run and report, with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub suite: Suite,
    pub tests: Vec<TestId>,
    /// `None` runs both approximations for tests that have two.
    pub variant: Option<Variant>,
    pub generators: Vec<GeneratorKind>,
    pub seed: Vec<u8>,
    /// Per-run override of the tier's sample size.
    pub n: Option<u64>,
    pub big_n: u64,
    pub n_prime: u64,
    pub alpha: f64,
    pub j_min: u64,
    pub threads: usize,
    pub tier: Tier,
    pub out: PathBuf,
    pub force: bool,
    pub budget_secs: f64,
    pub savir_t: Option<usize>,
    pub savir_m: Option<u64>,
    pub corr_k: usize,
    pub run_k: Option<usize>,
    pub progress: bool,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn positive(name: &str, v: Option<u64>) -> Result<Option<u64>, CliError> {
    match v {
        Some(0) => usage(format!("--{name} must be positive")),
        v => Ok(v),
    }
}

impl RunConfig {
    /// Merges flags over file values over defaults and validates the result.
    pub fn resolve(args: Args) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let tests_given = args.test.clone().or(file.test);
        let suite = match (args.suite.or(file.suite), &tests_given) {
            (Some(s), _) => s,
            (None, Some(_)) => Suite::Single,
            (None, None) => return usage("give --suite or --test"),
        };
        let tests = match (suite, tests_given) {
            (Suite::Single, None) => return usage("--suite single needs --test"),
            (_, Some(names)) => {
                let mut ids = Vec::new();
                for name in names.iter().filter(|s| !s.trim().is_empty()) {
                    let id = TestId::from_str(name.trim()).map_err(|e| CliError::Usage(e.to_string()))?;
                    if !ids.contains(&id) {
                        ids.push(id);
                    }
                }
                if ids.is_empty() {
                    return usage("--test lists no tests");
                }
                ids
            }
            (s, None) => s.tests(),
        };
        let variant = match args.variant.or(file.variant) {
            Some(v) => Some(Variant::from_str(&v).map_err(|e| CliError::Usage(e.to_string()))?),
            None => None,
        };
        let generators = args
            .generator
            .or(file.generator)
            .unwrap_or_else(|| vec!["mt19937".to_string()])
            .iter()
            .map(|g| GeneratorKind::from_str(g.trim()).map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if generators.is_empty() {
            return usage("--generator lists no generators");
        }
        let seed_hex = args.seed.or(file.seed).unwrap_or_else(|| DEFAULT_SEED.to_string());
        let seed = hex::decode(seed_hex.trim_start_matches("0x"))
            .map_err(|e| CliError::Usage(format!("--seed must be hex digits: {e}")))?;
        if seed.is_empty() {
            return usage("--seed must not be empty");
        }
        let tier = args.tier.or(file.tier).unwrap_or(Tier::Desk);
        let (default_big_n, default_n_prime) = match tier {
            Tier::Desk => (100, 100),
            Tier::Paper => (1000, 1000),
        };
        let alpha = args.alpha.or(file.alpha).unwrap_or(0.01);
        if !(alpha > 0.0 && alpha < 1.0) {
            return usage(format!("--alpha must lie in (0, 1), got {alpha}"));
        }
        let j_min_given = args.j_min.or(file.j_min);
        if j_min_given.is_some() && !tests.iter().any(|t| t.may_discard()) {
            return usage("--Jmin applies only to the random excursion tests");
        }
        let threads = match args.threads.or(file.threads) {
            Some(0) => return usage("--threads must be positive"),
            Some(t) => t,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let budget_secs = args.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET_SECS);
        if !(budget_secs > 0.0) {
            return usage("--budget must be positive");
        }
        let savir_t = positive("savir-t", args.savir_t.or(file.savir_t).map(|t| t as u64))?.map(|t| t as usize);
        let savir_m = args.savir_m.or(file.savir_m);
        if matches!(savir_m, Some(m) if m < 2) {
            return usage("--savir-m must be at least 2");
        }
        let run_k = args.run_k.or(file.run_k);
        if matches!(run_k, Some(k) if k < 2) {
            return usage("--run-k must be at least 2");
        }
        Ok(Self {
            suite,
            tests,
            variant,
            generators,
            seed,
            n: positive("n", args.n.or(file.n))?,
            big_n: positive("N", args.big_n.or(file.big_n))?.unwrap_or(default_big_n),
            n_prime: positive("Nprime", args.n_prime.or(file.n_prime))?.unwrap_or(default_n_prime),
            alpha,
            j_min: j_min_given.unwrap_or(500),
            threads,
            tier,
            out: args.out.or(file.out).unwrap_or_else(|| PathBuf::from("rng-audit-out")),
            force: args.force || file.force.unwrap_or(false),
            budget_secs,
            savir_t,
            savir_m,
            corr_k: positive("corr-k", args.corr_k.or(file.corr_k).map(|k| k as u64))?.map_or(1, |k| k as usize),
            run_k,
            progress: args.progress,
        })
    }

    /// Default level-1 sample size for a test in this suite and tier.
    pub fn default_n(&self, id: TestId) -> u64 {
        let paper = self.tier == Tier::Paper;
        let crush = self.suite == Suite::CrushSubset;
        match id {
            TestId::SampleCorr => match (paper, crush) {
                (true, true) => 500_000_000,
                _ => 1_000_000,
            },
            TestId::StringRun => match (paper, crush) {
                (true, true) => 1_000_000_000,
                (true, false) => 1_000_000,
                _ => 100_000,
            },
            TestId::Savir2 => match (paper, crush) {
                (true, true) => 20_000_000,
                (true, false) => 1_000_000,
                _ => 100_000,
            },
            TestId::Identity => 1,
            _ if paper => 1_000_000,
            _ => 100_000,
        }
    }

    /// Savir2 chain length: Crush uses 30, otherwise the proposed 9.
    pub fn savir_t(&self) -> usize {
        self.savir_t.unwrap_or(if self.suite == Suite::CrushSubset { 30 } else { 9 })
    }

    /// Variants to run for one test.
    pub fn variants_for(&self, id: TestId) -> Vec<Variant> {
        if !id.has_variants() {
            return vec![Variant::Original];
        }
        match self.variant {
            Some(v) => vec![v],
            None => vec![Variant::Original, Variant::Modified],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut full = vec!["rng-audit"];
        full.extend_from_slice(args);
        RunConfig::resolve(Args::try_parse_from(full).map_err(|e| CliError::Usage(e.to_string()))?)
    }

    #[test]
    fn paper_tier_defaults() {
        let c = parse(&["--suite", "nist", "--generator", "mt19937", "--tier", "paper"]).unwrap();
        assert_eq!((c.big_n, c.n_prime, c.alpha), (1000, 1000, 0.01));
        assert_eq!(c.default_n(TestId::Dft), 1_000_000);
        assert_eq!(c.tests.len(), 15);
        assert_eq!(c.variants_for(TestId::Dft), vec![Variant::Original, Variant::Modified]);
        assert_eq!(c.variants_for(TestId::Frequency), vec![Variant::Original]);
    }

    #[test]
    fn desk_defaults_and_single_test() {
        let c = parse(&["--test", "dft", "--variant", "modified"]).unwrap();
        assert_eq!(c.suite, Suite::Single);
        assert_eq!(c.tests, vec![TestId::Dft]);
        assert_eq!((c.big_n, c.n_prime), (100, 100));
        assert_eq!(c.default_n(TestId::Dft), 100_000);
        assert_eq!(c.variants_for(TestId::Dft), vec![Variant::Modified]);
        assert_eq!(c.seed, vec![0x5e, 0xed]);
    }

    #[test]
    fn crush_subset_parameters() {
        let c = parse(&["--suite", "crush-subset", "--tier", "paper"]).unwrap();
        assert_eq!(c.default_n(TestId::SampleCorr), 500_000_000);
        assert_eq!(c.default_n(TestId::Savir2), 20_000_000);
        assert_eq!(c.savir_t(), 30);
        let c = parse(&["--suite", "smallcrush-subset"]).unwrap();
        assert_eq!(c.savir_t(), 9);
        assert_eq!(c.default_n(TestId::SampleCorr), 1_000_000);
    }

    #[test]
    fn usage_errors() {
        for args in [
            &[][..],
            &["--test", "frequency", "--Jmin", "10"],
            &["--test", "nope"],
            &["--suite", "single"],
            &["--test", "dft", "--alpha", "1.5"],
            &["--test", "dft", "--seed", "xyz"],
            &["--test", "dft", "--variant", "sideways"],
            &["--test", "dft", "--generator", "lcg"],
            &["--test", "dft", "--N", "0"],
            &["--test", "dft", "--threads", "0"],
        ] {
            assert!(matches!(parse(args), Err(CliError::Usage(_))), "{args:?}");
        }
        assert!(parse(&["--test", "random-excursions", "--Jmin", "10"]).is_ok());
    }

    #[test]
    fn file_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "suite = \"nist\"\nN = 20\nNprime = 30\nseed = \"ab\"\n").unwrap();
        let c = parse(&["--config", path.to_str().unwrap(), "--N", "40"]).unwrap();
        assert_eq!((c.big_n, c.n_prime, c.seed.clone()), (40, 30, vec![0xab]));
        std::fs::write(&path, "suite = \"nist\"\nbogus = 1\n").unwrap();
        assert!(matches!(
            parse(&["--config", path.to_str().unwrap()]),
            Err(CliError::Usage(_))
        ));
    }
}
