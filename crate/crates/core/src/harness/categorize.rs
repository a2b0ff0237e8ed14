//! Categories of the level-2 count `T` for the level-3 χ² test.

use std::ops::RangeInclusive;

use crate::error::{config, Result};
use crate::numerics::binom_logpmf;

/// Disjoint ranges covering `0..=N`, in ascending order, with the
/// probability of each under `T ~ B(N, 1 - alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorization {
    pub categories: Vec<RangeInclusive<u64>>,
    pub probs: Vec<f64>,
}

impl Categorization {
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Degrees of freedom of the level-3 test.
    pub fn df(&self) -> usize {
        self.len() - 1
    }

    /// Index of the category containing `t`.
    pub fn index_of(&self, t: u64) -> Option<usize> {
        let i = self.categories.partition_point(|c| *c.end() < t);
        (i < self.len() && self.categories[i].contains(&t)).then_some(i)
    }
}

fn binomial_pmf(n: u64, p: f64) -> Result<Vec<f64>> {
    (0..=n).map(|j| Ok(binom_logpmf(n, p, j)?.prob())).collect()
}

fn with_probs(n: u64, p: f64, categories: Vec<RangeInclusive<u64>>) -> Result<Categorization> {
    let pmf = binomial_pmf(n, p)?;
    let probs = categories
        .iter()
        .map(|c| pmf[*c.start() as usize..=*c.end() as usize].iter().sum())
        .collect();
    Ok(Categorization { categories, probs })
}

/// Categories for `N` level-1 p-values per batch and `N'` batches.
///
/// For `(N, alpha, N') = (1000, 0.01, 1000)` this is the fixed layout
/// `{0..981}, {982}, ..., {996}, {997..1000}`. Otherwise every value whose
/// expected count `N' P(T = j)` reaches `min_expect` is its own category
/// (these form one interval around the mode) and the two tails are merged
/// into one category each, absorbing neighbours until they too reach
/// `min_expect`.
pub fn build_categories(n: u64, alpha: f64, n_prime: u64, min_expect: f64) -> Result<Categorization> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return config(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if n < 10 {
        return config(format!("N must be at least 10, got {n}"));
    }
    if n_prime == 0 {
        return config("N' must be positive");
    }
    if !(min_expect >= 1.0) {
        return config(format!("min_expect must be at least 1, got {min_expect}"));
    }
    let p = 1.0 - alpha;
    if n == 1000 && n_prime == 1000 && alpha == 0.01 {
        let mut cats = vec![0..=981];
        cats.extend((982..=996).map(|j| j..=j));
        cats.push(997..=1000);
        return with_probs(n, p, cats);
    }
    generic_categories(n, p, n_prime, min_expect)
}

fn generic_categories(n: u64, p: f64, n_prime: u64, min_expect: f64) -> Result<Categorization> {
    let pmf = binomial_pmf(n, p)?;
    let expected = |q: f64| q * n_prime as f64;
    let mode = (0..=n as usize)
        .max_by(|&a, &b| pmf[a].total_cmp(&pmf[b]))
        .expect("non-empty range");
    // unimodal pmf: the large cells form one interval around the mode
    let mut lo = mode;
    while lo > 0 && expected(pmf[lo - 1]) >= min_expect {
        lo -= 1;
    }
    let mut hi = mode;
    while hi < n as usize && expected(pmf[hi + 1]) >= min_expect {
        hi += 1;
    }
    let mut cats: Vec<RangeInclusive<u64>> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    if lo > 0 {
        cats.push(0..=lo as u64 - 1);
        probs.push(pmf[..lo].iter().sum());
    }
    for j in lo..=hi {
        cats.push(j as u64..=j as u64);
        probs.push(pmf[j]);
    }
    if hi < n as usize {
        cats.push(hi as u64 + 1..=n);
        probs.push(pmf[hi + 1..].iter().sum());
    }
    // merge small categories inward, the outermost first
    loop {
        let small = |i: usize| expected(probs[i]) < min_expect;
        let last = cats.len() - 1;
        let i = if small(0) {
            0
        } else if small(last) {
            last
        } else if let Some(i) = (0..cats.len()).find(|&i| small(i)) {
            i
        } else {
            break;
        };
        if cats.len() < 2 {
            break;
        }
        let (a, b) = if i == last { (i - 1, i) } else { (i, i + 1) };
        let merged = *cats[a].start()..=*cats[b].end();
        let mass = probs[a] + probs[b];
        cats.splice(a..=b, [merged]);
        probs.splice(a..=b, [mass]);
    }
    if cats.len() < 2 || probs.iter().any(|&q| expected(q) < min_expect) {
        return config(format!(
            "cannot form two categories with expected count >= {min_expect} (N={n}, N'={n_prime})"
        ));
    }
    with_probs(n, p, cats)
}
