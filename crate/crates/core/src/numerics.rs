//! Special functions and distribution tails.
//!
//! `igamc` is the workhorse: every χ² p-value in the crate goes through it.
//! It evaluates the regularized upper incomplete gamma function in log space
//! (series for `x < a + 1`, Lentz continued fraction otherwise) so that tails
//! far below `f64::MIN_POSITIVE` still have a usable logarithm.

use std::f64::consts::{LN_10, PI, SQRT_2};

use crate::error::{Error, Result};

/// Reported p-values below this threshold are shown as `eps`.
pub const EPS_THRESHOLD: f64 = 1e-320;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MAX_ITER: usize = 100_000;

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_nan() {
        return Err(Error::Domain(format!("{name}: NaN argument")));
    }
    Ok(())
}

/// Complementary error function.
pub fn erfc(x: f64) -> Result<f64> {
    check_finite("erfc", x)?;
    Ok(libm::erfc(x))
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// Upper-tail probability of the standard normal, `P(Z > x)`.
pub fn normal_sf(x: f64) -> Result<f64> {
    check_finite("normal_sf", x)?;
    Ok(0.5 * libm::erfc(x / SQRT_2))
}

/// Two-sided normal p-value, `erfc(|z| / sqrt 2)`.
pub fn normal_two_sided(z: f64) -> Result<f64> {
    check_finite("normal_two_sided", z)?;
    Ok(libm::erfc(z.abs() / SQRT_2))
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if a.is_nan() || x.is_nan() {
        return Err(Error::Domain("igamc: NaN argument".into()));
    }
    if a <= 0.0 {
        return Err(Error::Domain(format!("igamc: a = {a} must be positive")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("igamc: x = {x} must be non-negative")));
    }
    Ok(())
}

/// `ln(x^a e^-x / Gamma(a))`
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

/// Lower regularized gamma by its power series; valid for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (ln_gamma_prefactor(a, x) + sum.ln()).exp()
}

/// `ln Q(a, x)` by the modified Lentz continued fraction; valid for `x >= a + 1`.
fn ln_gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    ln_gamma_prefactor(a, x) + h.ln()
}

/// Natural log of the regularized upper incomplete gamma function.
pub fn ln_igamc(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    if x < a + 1.0 {
        Ok((-gamma_p_series(a, x)).ln_1p())
    } else {
        Ok(ln_gamma_q_fraction(a, x))
    }
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn igamc(a: f64, x: f64) -> Result<f64> {
    Ok(ln_igamc(a, x)?.exp().clamp(0.0, 1.0))
}

/// Survival function of the χ² distribution with `df` degrees of freedom.
pub fn chi2_sf(df: usize, x: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi2_sf: df must be at least 1".into()));
    }
    igamc(df as f64 / 2.0, x / 2.0)
}

/// `log10` of [`chi2_sf`], finite far below the smallest positive double.
pub fn chi2_log10_sf(df: usize, x: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi2_log10_sf: df must be at least 1".into()));
    }
    Ok(ln_igamc(df as f64 / 2.0, x / 2.0)? / LN_10)
}

/// A probability held as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub fn new(ln_p: f64) -> Result<Self> {
        if ln_p.is_nan() || ln_p > 0.0 {
            return Err(Error::Domain(format!("{ln_p} is not a log-probability")));
        }
        Ok(Self(ln_p))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// Error of Stirling's approximation to `ln n!`:
/// `ln Gamma(n + 1) - (n + 1/2) ln n + n - ln sqrt(2 pi)`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Binomial log-pmf `ln[C(n, j) p^j (1-p)^(n-j)]` using the saddle-point
/// expansion, which keeps full relative accuracy in the pmf.
pub fn binom_logpmf(n: u64, p: f64, j: u64) -> Result<LogProb> {
    if n == 0 || !(p > 0.0 && p < 1.0) || j > n {
        return Err(Error::Domain(format!(
            "binom_logpmf: invalid arguments n={n}, p={p}, j={j}"
        )));
    }
    let q = 1.0 - p;
    let nf = n as f64;
    let lp = if j == 0 {
        nf * (-p).ln_1p()
    } else if j == n {
        nf * p.ln()
    } else {
        let jf = j as f64;
        let kf = nf - jf;
        stirling_error(nf) - stirling_error(jf) - stirling_error(kf)
            - deviance(jf, nf * p)
            - deviance(kf, nf * q)
            + 0.5 * (nf / (2.0 * PI * jf * kf)).ln()
    };
    LogProb::new(lp.min(0.0))
}

/// A p-value prepared for reporting: the value itself, clamped to [0, 1],
/// and its base-10 logarithm, which stays finite when the value underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportedP {
    pub value: f64,
    pub log10: f64,
}

impl ReportedP {
    pub fn from_log10(log10: f64) -> Self {
        let log10 = log10.min(0.0);
        Self {
            value: 10f64.powf(log10).clamp(0.0, 1.0),
            log10,
        }
    }

    pub fn from_value(value: f64) -> Self {
        let value = value.clamp(0.0, 1.0);
        Self {
            value,
            log10: value.log10(),
        }
    }

    /// Below the reporting threshold, shown as `eps`.
    pub fn is_eps(&self) -> bool {
        self.value < EPS_THRESHOLD
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ---- independent oracles -------------------------------------------------

    /// erfc from the Maclaurin series of erf, summed with enough terms that
    /// the remainder is below double precision for |x| <= 2.
    fn erfc_series(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 0..60 {
            if n > 0 {
                fact *= n as f64;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * x.powi(2 * n + 1) / (fact * (2 * n + 1) as f64);
        }
        1.0 - 2.0 / PI.sqrt() * sum
    }

    /// Adaptive Simpson quadrature.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    /// Q(a, x) for integer a by integrating t^(a-1) e^-t / (a-1)! over [x, x + 400].
    fn igamc_quadrature(a: u32, x: f64) -> f64 {
        let fact: f64 = (1..a).map(f64::from).product();
        let f = |t: f64| t.powi(a as i32 - 1) * (-t).exp() / fact;
        simpson(&f, x, x + 400.0, 1e-15)
    }

    fn normal_sf_quadrature(x: f64) -> f64 {
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        simpson(&f, x, 40.0, 1e-16)
    }

    // ---- erfc ---------------------------------------------------------------

    #[test]
    fn erfc_basics() {
        assert_eq!(erfc(0.0).unwrap(), 1.0);
        for x in [0.5, 1.0, 3.0] {
            let s = erfc(-x).unwrap() + erfc(x).unwrap();
            assert!((s - 2.0).abs() < 1e-15, "{x}: {s}");
        }
        assert!(erfc(f64::NAN).is_err());
        assert!(erfc(30.0).unwrap() >= 0.0);
    }

    #[test]
    fn erfc_against_series_oracle() {
        let oracle = erfc_series(1.0);
        assert!((oracle - 0.157_299_207_050_285_1).abs() < 1e-15);
        let ours = erfc(1.0).unwrap();
        assert!(((ours - oracle) / oracle).abs() < 1e-12);
        for x in [0.1, 0.5, 1.5, 2.0] {
            let o = erfc_series(x);
            assert!(((erfc(x).unwrap() - o) / o).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn erfc_far_tail_against_asymptotic_fraction() {
        // erfc(x) ~ e^{-x^2} / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6) + 105/(16x^8))
        for x in [12.0f64, 15.0, 20.0, 26.0] {
            let x2 = x * x;
            let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2)
                - 15.0 / (8.0 * x2.powi(3))
                + 105.0 / (16.0 * x2.powi(4))
                - 945.0 / (32.0 * x2.powi(5))
                + 10395.0 / (64.0 * x2.powi(6));
            let ln_expected = -x2 - (x * PI.sqrt()).ln() + series.ln();
            let ours = erfc(x).unwrap();
            if ours > 0.0 {
                assert!((ours.ln() - ln_expected).abs() < 1e-10, "x = {x}");
            }
        }
    }

    // ---- igamc / chi2 -------------------------------------------------------

    #[test]
    fn igamc_trivial_identities() {
        for a in [0.5, 8.0, 50.0] {
            assert_eq!(igamc(a, 0.0).unwrap(), 1.0);
        }
        for x in [0.25f64, 1.0, 4.0] {
            let lhs = igamc(0.5, x).unwrap();
            let rhs = erfc(x.sqrt()).unwrap();
            assert!(((lhs - rhs) / rhs).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn igamc_domain_errors() {
        assert!(igamc(0.0, 1.0).is_err());
        assert!(igamc(-1.0, 1.0).is_err());
        assert!(igamc(1.0, -0.5).is_err());
        assert!(igamc(f64::NAN, 1.0).is_err());
        assert!(chi2_sf(0, 1.0).is_err());
    }

    #[test]
    fn igamc_against_quadrature() {
        let oracle = igamc_quadrature(8, 16.0);
        let ours = igamc(8.0, 16.0).unwrap();
        assert!(((ours - oracle) / oracle).abs() < 1e-10, "{ours} vs {oracle}");
        for (a, x) in [(1, 0.3), (3, 2.0), (5, 12.0), (20, 15.0), (20, 40.0)] {
            let o = igamc_quadrature(a, x);
            let ours = igamc(f64::from(a), x).unwrap();
            assert!(((ours - o) / o).abs() < 1e-10, "a={a} x={x}: {ours} vs {o}");
        }
    }

    #[test]
    fn igamc_integer_closed_form_over_wide_range() {
        // Q(a, x) = e^-x sum_{k<a} x^k / k! for integer a; summed in log space.
        for a in [1u32, 2, 10, 60, 150, 200] {
            for x in [0.5, 0.9 * f64::from(a), f64::from(a) + 1.0, 1.3 * f64::from(a) + 5.0] {
                let terms: Vec<f64> = (0..a)
                    .map(|k| f64::from(k) * x.ln() - x - ln_gamma(f64::from(k) + 1.0))
                    .collect();
                let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ln_q = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
                let ours = ln_igamc(f64::from(a), x).unwrap();
                assert!(
                    (ours - ln_q).abs() < 1e-10 * ln_q.abs().max(1.0),
                    "a={a} x={x}: {ours} vs {ln_q}"
                );
            }
        }
    }

    #[test]
    fn chi2_sf_examples() {
        assert_eq!(chi2_sf(16, 0.0).unwrap(), 1.0);
        let oracle = igamc_quadrature(8, 16.0);
        assert!((chi2_sf(16, 32.0).unwrap() - oracle).abs() < 1e-8);
        assert!((oracle - 0.01).abs() < 2e-4);
        for x in [1.0f64, 5.0] {
            let v = chi2_sf(2, x).unwrap();
            assert!(((v - (-x / 2.0).exp()) / v).abs() < 1e-13);
        }
    }

    #[test]
    fn chi2_tail_does_not_flush_early() {
        // df = 16 at x = 1500: ln Q is about -700, so Q ~ 1e-304.
        let v = chi2_sf(16, 1500.0).unwrap();
        assert!(v > 0.0 && v < 1e-290);
        let l = chi2_log10_sf(16, 1500.0).unwrap();
        assert!((v.log10() - l).abs() < 1e-9);
        // Far below the double range the log is still finite.
        let deep = chi2_log10_sf(16, 1e5).unwrap();
        assert!(deep.is_finite() && deep < -20_000.0);
    }

    #[test]
    fn chi2_and_normal_consistency() {
        for z in [0.5f64, 1.0, 2.0, 3.0] {
            let lhs = chi2_sf(1, z * z).unwrap();
            let rhs = 2.0 * normal_sf(z).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn monotone_on_grid() {
        for a in [0.5f64, 2.0, 8.0, 50.0, 200.0] {
            // Stay where Q is neither 1 nor 0 to double precision.
            let lo = (a - 4.0 * a.sqrt()).max(0.01);
            let hi = a + 12.0 * a.sqrt() + 10.0;
            let mut prev = 1.0 + 1e-9;
            for i in 0..100 {
                let x = lo + f64::from(i) * (hi - lo) / 100.0;
                let v = igamc(a, x).unwrap();
                assert!(v < prev, "a={a} x={x}");
                prev = v;
            }
        }
        let mut prev = 2.0;
        for i in 0..100 {
            let v = chi2_sf(16, f64::from(i) * 0.6).unwrap();
            assert!(v < prev || (i == 0 && v == 1.0));
            prev = v;
        }
    }

    #[test]
    fn normal_sf_examples() {
        assert_eq!(normal_sf(0.0).unwrap(), 0.5);
        for x in [0.3, 1.0, 2.5, 6.0] {
            let s = normal_sf(x).unwrap() + normal_sf(-x).unwrap();
            assert!((s - 1.0).abs() < 1e-15);
        }
        let z = 1.644_853_626_951_472_2;
        let oracle = normal_sf_quadrature(z);
        assert!((oracle - 0.05).abs() < 1e-9);
        assert!((normal_sf(z).unwrap() - 0.05).abs() < 1e-9);
        assert!(normal_sf(f64::NAN).is_err());
    }

    #[test]
    fn randomized_ranges() {
        let mut mt = crate::bitstream::Mt19937::new(2024);
        let mut u = || f64::from(mt.next_u32()) / 4_294_967_296.0;
        for _ in 0..10_000 {
            let x = (u() - 0.5) * 60.0;
            let e = erfc(x).unwrap();
            assert!((0.0..=2.0).contains(&e));
            let n = normal_sf(x).unwrap();
            assert!((0.0..=1.0).contains(&n));
            let a = 0.5 + u() * 200.0;
            let y = u() * 500.0;
            let q = igamc(a, y).unwrap();
            assert!((0.0..=1.0).contains(&q), "a={a} y={y} q={q}");
            let df = 1 + (u() * 300.0) as usize;
            let c = chi2_sf(df, y).unwrap();
            assert!((0.0..=1.0).contains(&c));
        }
    }

    // ---- binomial -----------------------------------------------------------

    #[test]
    fn binom_small_cases() {
        let v = binom_logpmf(2, 0.5, 1).unwrap().ln();
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
        assert!(binom_logpmf(0, 0.5, 0).is_err());
        assert!(binom_logpmf(10, 1.0, 3).is_err());
        assert!(binom_logpmf(10, 0.5, 11).is_err());
    }

    #[test]
    fn binom_normalizes_and_peaks_at_mode() {
        let probs: Vec<f64> = (0..=1000)
            .map(|j| binom_logpmf(1000, 0.99, j).unwrap().prob())
            .collect();
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
        let argmax = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 990);
    }

    #[test]
    fn binom_matches_exact_coefficients() {
        use num_bigint::BigUint;
        use num_traits::ToPrimitive;
        // C(n, j) exactly, then ln via its f64 image, which is exact to 1 ulp.
        for (n, p) in [(1000u64, 0.99f64), (100, 0.3), (60, 0.5)] {
            let mut c = BigUint::from(1u32);
            for j in 0..=n {
                if j > 0 {
                    c = c * BigUint::from(n - j + 1) / BigUint::from(j);
                }
                let ln_c = c.to_f64().unwrap().ln();
                let expected = ln_c + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln();
                let ours = binom_logpmf(n, p, j).unwrap().ln();
                if expected > -700.0 {
                    let rel = (ours - expected).exp() - 1.0;
                    assert!(rel.abs() < 1e-12, "n={n} j={j}: rel {rel}");
                }
            }
        }
    }

    #[test]
    fn reported_p_eps() {
        let r = ReportedP::from_log10(-400.0);
        assert!(r.is_eps());
        assert_eq!(r.value, 0.0);
        let r = ReportedP::from_value(0.25);
        assert!(!r.is_eps());
        assert!((r.log10 - 0.25f64.log10()).abs() < 1e-15);
    }
}
