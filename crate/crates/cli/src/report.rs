//! Report records, their line-delimited JSON form, and the text table.

use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use rng_audit::numerics::ReportedP;

/// Software version stamped on every record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A templated statistic counts as passing in the text table when its
/// third-level p-value is at least this.
pub const PASS_LEVEL: f64 = 1e-4;

/// A third-level p-value: a number, or `eps` below the reporting threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Value(f64),
    Eps,
}

impl From<ReportedP> for PValue {
    fn from(p: ReportedP) -> Self {
        if p.is_eps() {
            PValue::Eps
        } else {
            PValue::Value(p.value)
        }
    }
}

impl PValue {
    /// Numeric value, with `eps` as 0.
    pub fn value(self) -> f64 {
        match self {
            PValue::Value(v) => v,
            PValue::Eps => 0.0,
        }
    }

    /// Short form for tables: two decimals, else one significant digit
    /// after the point in scientific notation.
    pub fn short(self) -> String {
        match self {
            PValue::Eps => "eps".to_string(),
            PValue::Value(v) if v >= 0.01 => format!("{v:.2}"),
            PValue::Value(v) => format!("{v:.1E}"),
        }
    }
}

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PValue::Value(v) => s.serialize_f64(*v),
            PValue::Eps => s.serialize_str("eps"),
        }
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(PValue::Value(v)),
            Raw::Str(s) if s == "eps" => Ok(PValue::Eps),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"eps\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Too many level-1 applications were discarded.
    Inapplicable,
    /// The source ran out of bits.
    InsufficientInput,
}

/// Test-specific parameters; keys that do not apply are null.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub j_min: Option<u64>,
    /// Lag for SampleCorr, number of length classes for sstring_Run.
    pub k: Option<usize>,
    pub m: Option<u64>,
    pub t: Option<usize>,
}

/// One line of `report.jsonl`: a single statistic of one test, variant
/// and generator. Field order is the key order on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub version: String,
    pub suite: String,
    pub tier: String,
    pub test: String,
    /// Null for tests with a single approximation.
    pub variant: Option<String>,
    pub generator: String,
    pub seed: String,
    pub statistic: usize,
    pub label: String,
    pub n: u64,
    #[serde(rename = "N")]
    pub big_n: u64,
    #[serde(rename = "Nprime")]
    pub n_prime: u64,
    pub alpha: f64,
    pub min_expect: f64,
    pub params: Params,
    pub status: Status,
    pub message: Option<String>,
    /// Inclusive `[lo, hi]` ranges of the level-2 count.
    pub categories: Vec<[u64; 2]>,
    #[serde(rename = "T")]
    pub t: Vec<u64>,
    #[serde(rename = "Y")]
    pub y: Vec<u64>,
    pub h: Option<f64>,
    pub df: Option<usize>,
    pub pvalue3: Option<PValue>,
    pub pvalue3_log10: Option<f64>,
    pub discard_count: u64,
}

pub fn to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> serde_json::Result<Vec<Record>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

const NAME_WIDTH: usize = 36;
const CELL_WIDTH: usize = 14;

fn cell(r: &Record) -> String {
    match (r.status, r.pvalue3) {
        (Status::Ok, Some(p)) => p.short(),
        _ => "n/a".to_string(),
    }
}

/// Column key: generator and variant, tests without variants filed under
/// `original`.
fn column_of(r: &Record) -> (String, String) {
    (
        r.generator.clone(),
        r.variant.clone().unwrap_or_else(|| "original".to_string()),
    )
}

fn is_excursion(test: &str) -> bool {
    test == "random_excursions" || test == "random_excursions_variant"
}

/// Table text. Rows are tests in record order (one per statistic where a
/// test has several, one pass-count row for template families), then one
/// section per excursion test with a row per state. Columns are
/// generator × variant.
pub fn render_table(header: &str, records: &[Record]) -> String {
    let mut columns: Vec<(String, String)> = Vec::new();
    for r in records {
        let c = column_of(r);
        if !columns.contains(&c) {
            columns.push(c);
        }
    }
    columns.sort_by_key(|(g, v)| (columns_generator_rank(records, g), v != "original"));
    let mut out = String::new();
    writeln!(out, "{header}").unwrap();
    let head = |out: &mut String, first: &str| {
        write!(out, "\n{first:<NAME_WIDTH$}").unwrap();
        for (g, v) in &columns {
            let g = match g.as_str() {
                "mt19937" => "MT",
                "sha1" => "SHA1",
                other => other,
            };
            let v = if v == "original" { "orig" } else { "mod" };
            write!(out, " {:>w$}", format!("{g} {v}"), w = CELL_WIDTH - 1).unwrap();
        }
        out.push('\n');
    };
    head(&mut out, "Test");

    // rows keyed by (test, label); excursion tests go to their own sections
    let mut rows: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = if r.test == "non_overlapping_template" {
            (r.test.clone(), String::new())
        } else {
            (r.test.clone(), r.label.clone())
        };
        if !rows.contains(&key) {
            rows.push(key);
        }
    }
    let titles = |test: &str| -> String {
        test.parse::<rng_audit::descriptor::TestId>()
            .map(|t| t.title().to_string())
            .unwrap_or_else(|_| test.to_string())
    };
    let render_row = |out: &mut String, name: String, test: &str, label: Option<&str>| {
        write!(out, "{name:<NAME_WIDTH$}").unwrap();
        for (g, v) in &columns {
            let matching: Vec<&Record> = records
                .iter()
                .filter(|r| r.test == test && label.is_none_or(|l| r.label == l) && &r.generator == g)
                .collect();
            let exact: Vec<&&Record> = matching.iter().filter(|r| r.variant.as_deref() == Some(v.as_str())).collect();
            let text = if !exact.is_empty() {
                summarize(&exact.iter().map(|r| **r).collect::<Vec<_>>(), label.is_none())
            } else if matching.iter().any(|r| r.variant.is_none()) {
                if v == "original" {
                    summarize(&matching, label.is_none())
                } else {
                    "(same)".to_string()
                }
            } else {
                "-".to_string()
            };
            write!(out, "{text:>CELL_WIDTH$}").unwrap();
        }
        out.push('\n');
    };
    for (test, label) in rows.iter().filter(|(t, _)| !is_excursion(t)) {
        if test == "non_overlapping_template" {
            render_row(&mut out, titles(test), test, None);
        } else {
            let name = if label.is_empty() {
                titles(test)
            } else {
                format!("{} ({label})", titles(test))
            };
            render_row(&mut out, name, test, Some(label));
        }
    }
    for exc in ["random_excursions", "random_excursions_variant"] {
        let labels: Vec<&String> = rows.iter().filter(|(t, _)| t == exc).map(|(_, l)| l).collect();
        if labels.is_empty() {
            continue;
        }
        head(&mut out, &titles(exc));
        for label in labels {
            render_row(&mut out, label.clone(), exc, Some(label));
        }
        let discards: Vec<String> = columns
            .iter()
            .map(|(g, v)| {
                records
                    .iter()
                    .find(|r| r.test == exc && &r.generator == g && r.variant.as_deref().unwrap_or("original") == v)
                    .map_or("-".to_string(), |r| r.discard_count.to_string())
            })
            .collect();
        write!(out, "{:<NAME_WIDTH$}", "discards").unwrap();
        for d in discards {
            write!(out, "{d:>CELL_WIDTH$}").unwrap();
        }
        out.push('\n');
    }
    out.lines().map(|l| format!("{}\n", l.trim_end())).collect()
}

/// Position of a generator's first record, so columns follow input order.
fn columns_generator_rank(records: &[Record], generator: &str) -> usize {
    records.iter().position(|r| r.generator == generator).unwrap_or(usize::MAX)
}

/// One cell: the p-value of a single statistic, or `passed/total` for a
/// family of statistics.
fn summarize(records: &[&Record], family: bool) -> String {
    if !family {
        return records.first().map_or("-".to_string(), |r| cell(r));
    }
    if records.iter().any(|r| r.status != Status::Ok) {
        return "n/a".to_string();
    }
    let passed = records
        .iter()
        .filter(|r| r.pvalue3.is_some_and(|p| p.value() >= PASS_LEVEL))
        .count();
    format!("{passed}/{}", records.len())
}
