//! Pair-level bootstrap, proportion intervals, paired tests and multiple
//! comparison correction.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::hashing::derived_rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("bootstrap needs at least 2 units, got {0}")]
    TooFewUnits(usize),
    #[error("statistic undefined in {skipped} of {iterations} bootstrap iterations")]
    Unstable { skipped: usize, iterations: usize },
    #[error("test undefined: {0}")]
    UndefinedTest(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type StatsResult<T> = Result<T, StatsError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub iterations: usize,
    pub seed: u64,
    /// Two-sided coverage, 0.95 for the 2.5/97.5 percentiles.
    pub confidence: f64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        BootstrapSpec { iterations: 10_000, seed: 42, confidence: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    /// Iterations where the statistic was undefined.
    pub skipped: usize,
}

impl BootstrapCi {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap over resampled units (pairs). Iteration `i` draws
/// from its own stream of `spec.seed`, so the interval is identical whatever
/// the thread count. `statistic` returns `None` when undefined on a resample.
pub fn bootstrap_ci<T, F>(units: &[T], statistic: F, spec: BootstrapSpec) -> StatsResult<BootstrapCi>
where
    T: Sync,
    F: Fn(&[&T]) -> Option<f64> + Sync,
{
    bootstrap_many(units, 1, |s| vec![statistic(s)], spec)?
        .pop()
        .expect("one statistic requested")
}

/// Like [`bootstrap_ci`] for `k` statistics evaluated on the same resamples.
/// The outer error covers invalid input; each interval can fail on its own.
pub fn bootstrap_many<T, F>(
    units: &[T],
    k: usize,
    statistics: F,
    spec: BootstrapSpec,
) -> StatsResult<Vec<StatsResult<BootstrapCi>>>
where
    T: Sync,
    F: Fn(&[&T]) -> Vec<Option<f64>> + Sync,
{
    let n = units.len();
    if n < 2 {
        return Err(StatsError::TooFewUnits(n));
    }
    if spec.iterations == 0 || !(0.0..1.0).contains(&spec.confidence) {
        return Err(StatsError::Invalid(format!("{spec:?}")));
    }
    let draws: Vec<Vec<Option<f64>>> = (0..spec.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(spec.seed, i as u64);
            let sample: Vec<&T> = (0..n).map(|_| &units[rng.random_range(0..n)]).collect();
            let mut v = statistics(&sample);
            v.resize(k, None);
            v
        })
        .collect();
    let tail = (1.0 - spec.confidence) / 2.0;
    Ok((0..k)
        .map(|j| {
            let mut values: Vec<f64> = draws
                .iter()
                .filter_map(|d| d[j].filter(|v| !v.is_nan()))
                .collect();
            let skipped = spec.iterations - values.len();
            if skipped * 2 > spec.iterations {
                return Err(StatsError::Unstable { skipped, iterations: spec.iterations });
            }
            values.sort_by(f64::total_cmp);
            Ok(BootstrapCi {
                lo: percentile(&values, tail),
                hi: percentile(&values, 1.0 - tail),
                iterations: spec.iterations,
                skipped,
            })
        })
        .collect())
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_sf_1df(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    erfc((x / 2.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    P05,
    P01,
    P001,
    Bonferroni,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub statistic: f64,
    pub p: f64,
    /// McNemar: [[0, b], [c, 0]]. Contingency tests: the 2x2 table.
    pub table: [[u64; 2]; 2],
    pub significant_at: Vec<Significance>,
}

impl PairedTestResult {
    fn new(statistic: f64, table: [[u64; 2]; 2]) -> Self {
        let p = chi2_sf_1df(statistic).clamp(0.0, 1.0);
        let significant_at = [(0.05, Significance::P05), (0.01, Significance::P01), (0.001, Significance::P001)]
            .into_iter()
            .filter(|(a, _)| p < *a)
            .map(|(_, s)| s)
            .collect();
        PairedTestResult { statistic, p, table, significant_at }
    }

    /// Result for a comparison with no discordant or directional evidence.
    pub fn null(table: [[u64; 2]; 2]) -> Self {
        PairedTestResult { statistic: 0.0, p: 1.0, table, significant_at: Vec::new() }
    }

    /// Adds the Bonferroni flag when `p` is below the corrected alpha.
    pub fn with_bonferroni(mut self, corrected_alpha: f64) -> Self {
        if self.p < corrected_alpha && !self.significant_at.contains(&Significance::Bonferroni) {
            self.significant_at.push(Significance::Bonferroni);
        }
        self
    }
}

/// McNemar's test on discordant counts with a continuity correction clamped
/// at zero.
pub fn mcnemar(b: u64, c: u64) -> StatsResult<PairedTestResult> {
    if b + c == 0 {
        return Err(StatsError::UndefinedTest("McNemar with no discordant pairs"));
    }
    let diff = b.abs_diff(c).saturating_sub(1) as f64;
    let stat = diff * diff / (b + c) as f64;
    Ok(PairedTestResult::new(stat, [[0, b], [c, 0]]))
}

/// Pearson chi-square on the 2x2 table [[f1, m1], [f2, m2]]. With `yates`
/// the continuity correction is applied (clamped at zero).
pub fn chi2_2x2(f1: u64, m1: u64, f2: u64, m2: u64, yates: bool) -> StatsResult<PairedTestResult> {
    let r1 = f1 + m1;
    let r2 = f2 + m2;
    let c1 = f1 + f2;
    let c2 = m1 + m2;
    if r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 {
        return Err(StatsError::UndefinedTest("contingency table with a zero marginal"));
    }
    let n = (r1 + r2) as f64;
    let cross = (f1 as f64 * m2 as f64 - m1 as f64 * f2 as f64).abs();
    let cross = if yates { (cross - n / 2.0).max(0.0) } else { cross };
    let stat = n * cross * cross / (r1 as f64 * r2 as f64 * c1 as f64 * c2 as f64);
    Ok(PairedTestResult::new(stat, [[f1, m1], [f2, m2]]))
}

fn check_proportion(k: u64, n: u64, confidence: f64) -> StatsResult<()> {
    if n == 0 || k > n || !(0.0 < confidence && confidence < 1.0) {
        return Err(StatsError::Invalid(format!("k={k}, n={n}, confidence={confidence}")));
    }
    Ok(())
}

fn z_for(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Wilson score interval.
pub fn wilson_ci(k: u64, n: u64, confidence: f64) -> StatsResult<(f64, f64)> {
    check_proportion(k, n, confidence)?;
    let z = z_for(confidence);
    let (kf, nf) = (k as f64, n as f64);
    let p = kf / nf;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let denom = 1.0 + z2 / nf;
    let lo = if k == 0 { 0.0 } else { ((centre - half) / denom).max(0.0) };
    let hi = if k == n { 1.0 } else { ((centre + half) / denom).min(1.0) };
    Ok((lo, hi))
}

/// Clopper-Pearson exact interval from beta quantiles.
pub fn clopper_pearson_ci(k: u64, n: u64, confidence: f64) -> StatsResult<(f64, f64)> {
    check_proportion(k, n, confidence)?;
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let beta = |a: f64, b: f64, q: f64| {
        Beta::new(a, b)
            .map(|d| d.inverse_cdf(q))
            .map_err(|e| StatsError::Invalid(e.to_string()))
    };
    let lo = if k == 0 { 0.0 } else { beta(kf, nf - kf + 1.0, alpha / 2.0)? };
    let hi = if k == n { 1.0 } else { beta(kf + 1.0, nf - kf, 1.0 - alpha / 2.0)? };
    Ok((lo, hi))
}

pub fn bonferroni(alpha: f64, m: usize) -> f64 {
    alpha / m.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// P(X <= k) for X ~ Binomial(n, p), summed in log space.
    fn binom_cdf(k: u64, n: u64, p: f64) -> f64 {
        let mut total = 0.0;
        let mut log_coef = 0.0f64;
        for i in 0..=k {
            if i > 0 {
                log_coef += ((n - i + 1) as f64).ln() - (i as f64).ln();
            }
            total += (log_coef + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp();
        }
        total
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        // f is increasing in p and crosses zero once.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Exact interval by inverting binomial tails.
    fn cp_oracle(k: u64, n: u64, alpha: f64) -> (f64, f64) {
        let lo = if k == 0 {
            0.0
        } else {
            // P(X >= k | p) = alpha/2
            bisect(0.0, 1.0, |p| (1.0 - binom_cdf(k - 1, n, p)) - alpha / 2.0)
        };
        let hi = if k == n {
            1.0
        } else {
            // P(X <= k | p) = alpha/2, decreasing in p
            bisect(0.0, 1.0, |p| alpha / 2.0 - binom_cdf(k, n, p))
        };
        (lo, hi)
    }

    #[test]
    fn mcnemar_closed_form() {
        let r = mcnemar(5, 15).unwrap();
        assert_eq!(r.statistic, 4.05);
        assert!((r.p - 0.0441).abs() < 1e-4);
        assert_eq!(mcnemar(7, 7).unwrap().statistic, 0.0);
        assert_eq!(mcnemar(1, 0).unwrap().statistic, 0.0);
        assert_eq!(mcnemar(3, 9).unwrap(), {
            let mut r = mcnemar(9, 3).unwrap();
            r.table = [[0, 3], [9, 0]];
            r
        });
        assert!(mcnemar(0, 0).is_err());
    }

    #[test]
    fn chi2_cases() {
        let r = chi2_2x2(30, 10, 10, 30, false).unwrap();
        assert!((r.statistic - 20.0).abs() < 1e-12);
        assert!(r.p < 0.001);
        assert_eq!(chi2_2x2(4, 7, 4, 7, false).unwrap().statistic, 0.0);
        assert_eq!(chi2_2x2(4, 7, 4, 7, false).unwrap().p, 1.0);
        assert_eq!(chi2_2x2(3, 5, 6, 10, false).unwrap().statistic, 0.0);
        assert!(chi2_2x2(0, 0, 1, 2, false).is_err());
        assert!(chi2_2x2(3, 0, 5, 0, false).is_err());
        let y = chi2_2x2(30, 10, 10, 30, true).unwrap();
        assert!(y.statistic < 20.0);
    }

    #[test]
    fn chi2_tail_values() {
        assert_eq!(chi2_sf_1df(0.0), 1.0);
        assert!((chi2_sf_1df(3.841459) - 0.05).abs() < 1e-6);
        assert!((chi2_sf_1df(6.634897) - 0.01).abs() < 1e-6);
        assert!((chi2_sf_1df(10.827566) - 0.001).abs() < 1e-7);
    }

    #[test]
    fn proportion_intervals() {
        let (lo, _) = wilson_ci(0, 37, 0.95).unwrap();
        assert_eq!(lo, 0.0);

        // closed form, z = 1.959963984540054
        let z: f64 = 1.959963984540054;
        let (k, n) = (2.0f64, 499.0f64);
        let p = k / n;
        let hi_oracle = (p + z * z / (2.0 * n) + z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n);
        let (wlo, whi) = wilson_ci(2, 499, 0.95).unwrap();
        assert!((whi - hi_oracle).abs() < 1e-12);
        assert!((whi - 0.0145).abs() < 0.0002);
        assert!((wlo - 0.0011).abs() < 0.0001);

        let (clo, chi) = clopper_pearson_ci(2, 499, 0.95).unwrap();
        let (olo, ohi) = cp_oracle(2, 499, 0.05);
        assert!((clo - olo).abs() < 1e-9, "{clo} vs {olo}");
        assert!((chi - ohi).abs() < 1e-9, "{chi} vs {ohi}");
        assert_eq!(format!("{:.2}", clo * 100.0), "0.05");
        assert_eq!(format!("{:.1}", chi * 100.0), "1.4");
    }

    #[test]
    fn clopper_pearson_matches_tail_inversion() {
        for &(k, n) in &[(0u64, 10u64), (1, 10), (5, 10), (10, 10), (17, 250), (120, 300)] {
            let (lo, hi) = clopper_pearson_ci(k, n, 0.95).unwrap();
            let (olo, ohi) = cp_oracle(k, n, 0.05);
            assert!((lo - olo).abs() < 1e-8 && (hi - ohi).abs() < 1e-8, "{k}/{n}");
        }
    }

    #[test]
    fn bonferroni_values() {
        assert_eq!(bonferroni(0.05, 20), 0.0025);
        assert_eq!(bonferroni(0.05, 1), 0.05);
        assert_eq!(bonferroni(0.01, 4), 0.0025);
    }

    #[test]
    fn bootstrap_basics() {
        let same = vec![0u8; 50];
        let rate = |s: &[&u8]| Some(s.iter().filter(|&&&x| x == 1).count() as f64 / s.len() as f64);
        let spec = BootstrapSpec { iterations: 500, ..BootstrapSpec::default() };
        let ci = bootstrap_ci(&same, rate, spec).unwrap();
        assert_eq!((ci.lo, ci.hi, ci.skipped), (0.0, 0.0, 0));

        let mixed: Vec<u8> = (0..200).map(|i| u8::from(i % 5 == 0)).collect();
        let a = bootstrap_ci(&mixed, rate, spec).unwrap();
        let b = bootstrap_ci(&mixed, rate, spec).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(0.2));

        assert_eq!(bootstrap_ci(&[1u8], rate, spec), Err(StatsError::TooFewUnits(1)));
        let never = |_: &[&u8]| None;
        assert!(matches!(bootstrap_ci(&mixed, never, spec), Err(StatsError::Unstable { .. })));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_eq!(percentile(&v, 0.5), 2.5);
    }
}
