//! Prepared level-1 tests: a descriptor plus whatever tables it needs,
//! applied to successive portions of a bit source.

use crate::bitstream::BitSource;
use crate::descriptor::{TestDescriptor, TestId, TestOutcome};
use crate::error::{config, Result};
use crate::nist::{self, DftPlan, NonOverlapping, Overlapping, RunClasses, Universal};
use crate::tu01::{self, Savir2};

/// One level-1 test ready to be applied many times.
pub trait Level1Test: Send + Sync {
    fn descriptor(&self) -> &TestDescriptor;

    /// Number of p-values per non-discarded application.
    fn arity(&self) -> usize {
        self.descriptor().arity()
    }

    /// Reads the input for one application from `source` and runs the test.
    fn apply(&self, source: &mut BitSource) -> Result<TestOutcome>;
}

/// Builds the test for a descriptor, computing its probability tables once.
pub fn prepare(desc: &TestDescriptor) -> Result<Box<dyn Level1Test>> {
    if desc.n == 0 {
        return config("sample size n must be positive");
    }
    Ok(match desc.id {
        TestId::Identity => Box::new(Identity { desc: desc.clone() }),
        TestId::SampleCorr => {
            if desc.n <= desc.params.corr_lag as u64 {
                return config(format!(
                    "sample_corr needs n > k (n={}, k={})",
                    desc.n, desc.params.corr_lag
                ));
            }
            tu01::SampleCorr::new(desc.params.corr_lag, desc.variant)?;
            Box::new(SampleCorrTest { desc: desc.clone() })
        }
        TestId::StringRun => {
            let k = desc.params.run_k.unwrap_or_else(|| tu01::default_run_classes(desc.n));
            if k < 2 {
                return config("string_run needs at least two length classes");
            }
            Box::new(StringRunTest { desc: desc.clone(), k })
        }
        TestId::Savir2 => Box::new(Savir2Test {
            desc: desc.clone(),
            savir: Savir2::new(desc.params.savir.clone(), desc.n)?,
        }),
        _ => Box::new(NistTest::new(desc)?),
    })
}

struct Identity {
    desc: TestDescriptor,
}

impl Level1Test for Identity {
    fn descriptor(&self) -> &TestDescriptor {
        &self.desc
    }

    fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
        Ok(TestOutcome::single(source.uniform01()?))
    }
}

struct SampleCorrTest {
    desc: TestDescriptor,
}

impl Level1Test for SampleCorrTest {
    fn descriptor(&self) -> &TestDescriptor {
        &self.desc
    }

    fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
        let p = tu01::sample_corr_from_source(source, self.desc.n, self.desc.params.corr_lag, self.desc.variant)?;
        Ok(TestOutcome::single(p))
    }
}

struct StringRunTest {
    desc: TestDescriptor,
    k: usize,
}

impl Level1Test for StringRunTest {
    fn descriptor(&self) -> &TestDescriptor {
        &self.desc
    }

    fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
        let ps = tu01::string_run_test(source, self.desc.n, self.k, self.desc.variant)?;
        Ok(TestOutcome::values(ps.to_vec()))
    }
}

struct Savir2Test {
    desc: TestDescriptor,
    savir: Savir2,
}

impl Level1Test for Savir2Test {
    fn descriptor(&self) -> &TestDescriptor {
        &self.desc
    }

    fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
        Ok(TestOutcome::single(self.savir.run(source)?))
    }
}

/// Tables precomputed for the bit-block tests.
enum NistKind {
    Plain,
    LongestRun(RunClasses, Vec<f64>),
    Dft(DftPlan, f64),
    NonOverlapping(NonOverlapping),
    Overlapping(Overlapping),
    Universal(Universal),
}

struct NistTest {
    desc: TestDescriptor,
    n: usize,
    kind: NistKind,
}

impl NistTest {
    fn new(desc: &TestDescriptor) -> Result<Self> {
        let n = usize::try_from(desc.n).map_err(|_| crate::Error::Config("n too large".into()))?;
        let p = &desc.params;
        let kind = match desc.id {
            TestId::LongestRun => {
                let (classes, probs) = nist::variant_probs(n, desc.variant)?;
                NistKind::LongestRun(classes, probs)
            }
            TestId::Dft => NistKind::Dft(DftPlan::new(n)?, nist::variant_d(desc.variant)),
            TestId::NonOverlappingTemplate => {
                NistKind::NonOverlapping(NonOverlapping::new(p.template_len, p.template_blocks)?)
            }
            TestId::OverlappingTemplate => NistKind::Overlapping(Overlapping::standard(desc.variant)?),
            TestId::Universal => NistKind::Universal(Universal::new(desc.n, desc.variant)?),
            TestId::Rank if n < 38 * 1024 => {
                return Err(crate::Error::InsufficientInput {
                    requested: 38 * 1024,
                    available: desc.n,
                })
            }
            _ => NistKind::Plain,
        };
        Ok(Self {
            desc: desc.clone(),
            n,
            kind,
        })
    }
}

impl Level1Test for NistTest {
    fn descriptor(&self) -> &TestDescriptor {
        &self.desc
    }

    fn apply(&self, source: &mut BitSource) -> Result<TestOutcome> {
        let block = source.take_bits(self.n)?;
        let bits = block.bits();
        Ok(match &self.kind {
            NistKind::LongestRun(classes, probs) => {
                let used = classes.block_len * (bits.len() / classes.block_len);
                TestOutcome::single(nist::longest_run_with(&bits[..used], *classes, probs)?)
            }
            NistKind::Dft(plan, d) => TestOutcome::single(nist::dft_with_plan(plan, bits, *d)?),
            NistKind::NonOverlapping(t) => TestOutcome::values(t.pvalues(bits)?),
            NistKind::Overlapping(t) => TestOutcome::single(t.pvalue(bits)?),
            NistKind::Universal(u) => TestOutcome::single(u.pvalue(bits)?),
            NistKind::Plain => nist::run_standard_test(&self.desc, &block)?,
        })
    }
}
