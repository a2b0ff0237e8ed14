//! Runs every (test, generator, variant) of a configuration through the
//! three-level harness and writes the reports.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rng_audit::bitstream::{GeneratorKind, SourceSpec};
use rng_audit::descriptor::{TestDescriptor, TestId, TestParams, Variant};
use rng_audit::harness::{build_categories, run_three_level, ThreeLevelConfig};
use rng_audit::numerics::erfc;
use rng_audit::suite::{prepare, Level1Test};
use rng_audit::tu01::default_run_classes;
use rng_audit::Error;

use crate::config::{RunConfig, Tier};
use crate::error::CliError;
use crate::report::{render_table, to_jsonl, Params, PValue, Record, Status, VERSION};

const MIN_EXPECT: f64 = 5.0;

/// One level-1 test ready to run on one generator.
struct Job {
    desc: TestDescriptor,
    test: Box<dyn Level1Test>,
    generator: GeneratorKind,
    /// Whether the test has two approximations.
    has_variants: bool,
}

fn descriptor(cfg: &RunConfig, id: TestId, variant: Variant) -> TestDescriptor {
    let n = cfg.n.unwrap_or_else(|| cfg.default_n(id));
    let mut params = TestParams {
        j_min: cfg.j_min,
        corr_lag: cfg.corr_k,
        run_k: cfg.run_k,
        ..TestParams::default()
    };
    params.savir.t = cfg.savir_t();
    if let Some(m) = cfg.savir_m {
        params.savir.m = m;
    }
    TestDescriptor::new(id, n, variant).with_params(params)
}

fn record_params(desc: &TestDescriptor) -> Params {
    let p = &desc.params;
    match desc.id {
        TestId::RandomExcursions | TestId::RandomExcursionsVariant => Params {
            j_min: Some(p.j_min),
            ..Params::default()
        },
        TestId::SampleCorr => Params {
            k: Some(p.corr_lag),
            ..Params::default()
        },
        TestId::StringRun => Params {
            k: Some(p.run_k.unwrap_or_else(|| default_run_classes(desc.n))),
            ..Params::default()
        },
        TestId::Savir2 => Params {
            m: Some(p.savir.m),
            t: Some(p.savir.t),
            ..Params::default()
        },
        _ => Params::default(),
    }
}

/// Rough single-thread cost of one application in nanoseconds, measured on
/// a commodity x86 core. Used only for the paper-tier budget check.
pub fn application_cost_ns(desc: &TestDescriptor) -> f64 {
    let n = desc.n as f64;
    let per_bit = match desc.id {
        TestId::Frequency | TestId::BlockFrequency => 0.8,
        TestId::CumulativeSums => 2.8,
        TestId::Runs => 1.7,
        TestId::LongestRun => 2.0,
        TestId::Rank => 7.0,
        TestId::Dft => 10.5,
        TestId::NonOverlappingTemplate => 2.1,
        TestId::OverlappingTemplate => 1.5,
        TestId::Universal => 8.7,
        TestId::ApproximateEntropy => 3.0,
        TestId::Serial => 4.5,
        TestId::LinearComplexity => 33.0,
        TestId::RandomExcursions | TestId::RandomExcursionsVariant => {
            // returns to zero grow like sqrt(n)|Z|; retries follow from P(J >= J_min)
            let keep = erfc(desc.params.j_min as f64 / (2.0 * n).sqrt()).unwrap_or(1.0).max(0.01);
            2.2 / keep
        }
        TestId::SampleCorr => 4.0,
        TestId::StringRun => 8.0,
        TestId::Savir2 => 4.0 * desc.params.savir.t as f64,
        TestId::Identity => return 2500.0,
    };
    per_bit * n
}

/// Estimated wall time of a three-level run of `desc`, in seconds.
pub fn estimate_secs(desc: &TestDescriptor, cfg: &RunConfig) -> f64 {
    application_cost_ns(desc) * (cfg.big_n * cfg.n_prime) as f64 / cfg.threads as f64 * 1e-9
}

fn build_jobs(cfg: &RunConfig) -> Result<Vec<Job>, CliError> {
    let mut jobs = Vec::new();
    for &id in &cfg.tests {
        for generator in &cfg.generators {
            for variant in cfg.variants_for(id) {
                let desc = descriptor(cfg, id, variant);
                let test = prepare(&desc).map_err(|e| CliError::Usage(format!("{id}: {e}")))?;
                if cfg.tier == Tier::Paper && !cfg.force {
                    let secs = estimate_secs(&desc, cfg);
                    if secs > cfg.budget_secs {
                        return Err(CliError::Usage(format!(
                            "{id} ({variant}) at paper scale needs about {secs:.0} s, over the {:.0} s budget; \
                             pass --force to run it anyway or raise --budget",
                            cfg.budget_secs
                        )));
                    }
                }
                jobs.push(Job {
                    desc,
                    test,
                    generator: generator.clone(),
                    has_variants: id.has_variants(),
                });
            }
        }
    }
    Ok(jobs)
}

fn header(cfg: &RunConfig) -> String {
    format!(
        "rng-audit {VERSION}  suite={} tier={} N={} N'={} alpha={} seed={}",
        cfg.suite.as_str(),
        cfg.tier.as_str(),
        cfg.big_n,
        cfg.n_prime,
        cfg.alpha,
        hex::encode(&cfg.seed)
    )
}

fn unwritable(path: &Path, e: std::io::Error) -> CliError {
    CliError::Unwritable(format!("{}: {e}", path.display()))
}

fn run_job(job: &Job, cfg: &RunConfig, harness_cfg: &ThreeLevelConfig) -> Result<Vec<Record>, CliError> {
    let spec = SourceSpec::new(job.generator.clone(), cfg.seed.clone())
        .map_err(|e| CliError::Usage(format!("generator {}: {e}", job.generator)))?;
    let name = job.desc.id.name();
    let variant = job.desc.variant;
    let log = |b: u64| eprintln!("{name} {variant} {}: batch {}/{}", job.generator, b + 1, cfg.n_prime);
    let progress: Option<&(dyn Fn(u64) + Sync)> = if cfg.progress { Some(&log) } else { None };
    let base = |statistic: usize| Record {
        version: VERSION.to_string(),
        suite: cfg.suite.as_str().to_string(),
        tier: cfg.tier.as_str().to_string(),
        test: name.to_string(),
        variant: job.has_variants.then(|| variant.as_str().to_string()),
        generator: job.generator.to_string(),
        seed: hex::encode(&cfg.seed),
        statistic,
        label: job.desc.statistic_label(statistic),
        n: job.desc.n,
        big_n: cfg.big_n,
        n_prime: cfg.n_prime,
        alpha: cfg.alpha,
        min_expect: MIN_EXPECT,
        params: record_params(&job.desc),
        status: Status::Ok,
        message: None,
        categories: Vec::new(),
        t: Vec::new(),
        y: Vec::new(),
        h: None,
        df: None,
        pvalue3: None,
        pvalue3_log10: None,
        discard_count: 0,
    };
    match run_three_level(job.test.as_ref(), &spec, harness_cfg, progress) {
        Ok(report) => {
            let categories: Vec<[u64; 2]> =
                report.categories.categories.iter().map(|c| [*c.start(), *c.end()]).collect();
            Ok(report
                .statistics
                .into_iter()
                .map(|s| Record {
                    categories: categories.clone(),
                    t: s.t,
                    y: s.level3.y,
                    h: Some(s.level3.h),
                    df: Some(s.level3.df),
                    pvalue3: Some(PValue::from(s.level3.pvalue3)),
                    pvalue3_log10: Some(s.level3.pvalue3.log10),
                    discard_count: report.discard_count,
                    ..base(s.index)
                })
                .collect())
        }
        Err(e @ (Error::Inapplicable(_) | Error::InsufficientInput { .. })) => {
            let status = if matches!(e, Error::Inapplicable(_)) {
                Status::Inapplicable
            } else {
                Status::InsufficientInput
            };
            Ok((0..job.test.arity())
                .map(|i| Record {
                    status,
                    message: Some(e.to_string()),
                    ..base(i)
                })
                .collect())
        }
        Err(e) => Err(e.into()),
    }
}

/// Runs the configuration and writes `report.jsonl` and `report.txt` under
/// `cfg.out`. Returns the records.
pub fn execute(cfg: &RunConfig) -> Result<Vec<Record>, CliError> {
    build_categories(cfg.big_n, cfg.alpha, cfg.n_prime, MIN_EXPECT).map_err(|e| CliError::Usage(e.to_string()))?;
    let jobs = build_jobs(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| unwritable(&cfg.out, e))?;
    let jsonl_path = cfg.out.join("report.jsonl");
    let txt_path = cfg.out.join("report.txt");
    let mut jsonl = File::create(&jsonl_path).map_err(|e| unwritable(&jsonl_path, e))?;
    let mut txt = File::create(&txt_path).map_err(|e| unwritable(&txt_path, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let harness_cfg = ThreeLevelConfig {
        min_expect: MIN_EXPECT,
        ..ThreeLevelConfig::new(cfg.big_n, cfg.n_prime, cfg.alpha)
    };
    let mut records = Vec::new();
    for job in &jobs {
        let start = Instant::now();
        let recs = pool.install(|| run_job(job, cfg, &harness_cfg))?;
        eprintln!(
            "{} {} {}: done in {:.1} s",
            job.desc.id,
            job.desc.variant,
            job.generator,
            start.elapsed().as_secs_f64()
        );
        jsonl
            .write_all(to_jsonl(&recs).as_bytes())
            .and_then(|_| jsonl.flush())
            .map_err(|e| unwritable(&jsonl_path, e))?;
        records.extend(recs);
    }
    txt.write_all(render_table(&header(cfg), &records).as_bytes())
        .map_err(|e| unwritable(&txt_path, e))?;
    Ok(records)
}
