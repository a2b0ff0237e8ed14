//! Random excursions and random excursions variant tests.
//!
//! The walk `S_i = Σ (2 X_k - 1)` is padded to `(0, S_1, ..., S_n, 0)`.
//! A cycle runs from one zero to the next, so `J` is the number of zeros in
//! the padded walk minus one. When `S_n = 0` the padding contributes an
//! empty cycle `(0, 0)`.

use crate::descriptor::TestOutcome;
use crate::error::{require_bits, Result};
use crate::numerics::{erfc, igamc};

/// States examined by the excursions test, in report order.
pub const EXCURSION_STATES: [i64; 8] = [-4, -3, -2, -1, 1, 2, 3, 4];
/// States examined by the variant test, in report order.
pub const VARIANT_STATES: [i64; 18] = [
    -9, -8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8, 9,
];

/// Cycle statistics of the padded random walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSummary {
    /// Number of cycles.
    pub j: u64,
    /// `nu[s][k]`: cycles visiting `EXCURSION_STATES[s]` exactly `k` times
    /// (`k = 5` means five or more).
    pub nu: [[u64; 6]; 8],
    /// `xi[s]`: total visits to `VARIANT_STATES[s]`.
    pub xi: [u64; 18],
}

impl WalkSummary {
    pub fn nu_of(&self, x: i64) -> Option<&[u64; 6]> {
        EXCURSION_STATES.iter().position(|&s| s == x).map(|i| &self.nu[i])
    }

    pub fn xi_of(&self, x: i64) -> Option<u64> {
        VARIANT_STATES.iter().position(|&s| s == x).map(|i| self.xi[i])
    }
}

fn excursion_slot(s: i64) -> Option<usize> {
    match s {
        -4..=-1 => Some((s + 4) as usize),
        1..=4 => Some((s + 3) as usize),
        _ => None,
    }
}

fn variant_slot(s: i64) -> Option<usize> {
    match s {
        -9..=-1 => Some((s + 9) as usize),
        1..=9 => Some((s + 8) as usize),
        _ => None,
    }
}

pub fn walk_summary(bits: &[u8]) -> WalkSummary {
    let mut nu = [[0u64; 6]; 8];
    let mut xi = [0u64; 18];
    let mut j = 0u64;
    let mut in_cycle = [0u64; 8];
    let mut close_cycle = |in_cycle: &mut [u64; 8]| {
        for (row, c) in nu.iter_mut().zip(in_cycle.iter_mut()) {
            row[(*c).min(5) as usize] += 1;
            *c = 0;
        }
    };
    let mut s = 0i64;
    for &b in bits {
        s += 2 * i64::from(b) - 1;
        if s == 0 {
            close_cycle(&mut in_cycle);
            j += 1;
            continue;
        }
        if let Some(i) = excursion_slot(s) {
            in_cycle[i] += 1;
        }
        if let Some(i) = variant_slot(s) {
            xi[i] += 1;
        }
    }
    // the trailing padded zero always closes one more cycle
    close_cycle(&mut in_cycle);
    j += 1;
    WalkSummary { j, nu, xi }
}

/// `J` alone, without the visit counts.
pub fn cycle_count(bits: &[u8]) -> u64 {
    let mut s = 0i64;
    let mut zeros = 0u64;
    for &b in bits {
        s += 2 * i64::from(b) - 1;
        zeros += u64::from(s == 0);
    }
    zeros + 1
}

/// Probability that a cycle visits state `x` exactly `k` times (`k = 5`:
/// five or more).
pub fn pi_k(x: i64, k: usize) -> f64 {
    assert!(x != 0 && k <= 5);
    let a = x.unsigned_abs() as f64;
    let stay = 1.0 - 1.0 / (2.0 * a);
    match k {
        0 => stay,
        5 => stay.powi(4) / (2.0 * a),
        _ => stay.powi(k as i32 - 1) / (4.0 * a * a),
    }
}

/// The four-decimal table used by the reference implementation, indexed by
/// `|x| - 1`.
const PI_TABLE: [[f64; 6]; 4] = [
    [0.5000, 0.2500, 0.1250, 0.0625, 0.0312, 0.0312],
    [0.7500, 0.0625, 0.0469, 0.0352, 0.0264, 0.0791],
    [0.8333, 0.0278, 0.0231, 0.0193, 0.0161, 0.0804],
    [0.8750, 0.0156, 0.0137, 0.0120, 0.0105, 0.0733],
];

pub fn random_excursions(summary: &WalkSummary, j_min: u64) -> Result<TestOutcome> {
    if summary.j < j_min.max(1) {
        return Ok(TestOutcome::discarded_for(summary.j, j_min));
    }
    let jf = summary.j as f64;
    let pvalues = EXCURSION_STATES
        .iter()
        .zip(&summary.nu)
        .map(|(&x, row)| {
            let pi = &PI_TABLE[x.unsigned_abs() as usize - 1];
            let chi2: f64 = row
                .iter()
                .zip(pi)
                .map(|(&v, &p)| (v as f64 - jf * p).powi(2) / (jf * p))
                .sum();
            igamc(2.5, chi2 / 2.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestOutcome::values(pvalues))
}

pub fn random_excursions_variant(summary: &WalkSummary, j_min: u64) -> Result<TestOutcome> {
    if summary.j < j_min.max(1) {
        return Ok(TestOutcome::discarded_for(summary.j, j_min));
    }
    let jf = summary.j as f64;
    let pvalues = VARIANT_STATES
        .iter()
        .zip(&summary.xi)
        .map(|(&x, &xi)| {
            let a = x.unsigned_abs() as f64;
            erfc((xi as f64 - jf).abs() / (2.0 * jf * (4.0 * a - 2.0)).sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestOutcome::values(pvalues))
}

pub fn random_excursions_test(bits: &[u8], j_min: u64) -> Result<TestOutcome> {
    require_bits(1, bits.len())?;
    let j = cycle_count(bits);
    if j < j_min {
        return Ok(TestOutcome::discarded_for(j, j_min));
    }
    random_excursions(&walk_summary(bits), j_min)
}

pub fn random_excursions_variant_test(bits: &[u8], j_min: u64) -> Result<TestOutcome> {
    require_bits(1, bits.len())?;
    let j = cycle_count(bits);
    if j < j_min {
        return Ok(TestOutcome::discarded_for(j, j_min));
    }
    random_excursions_variant(&walk_summary(bits), j_min)
}
