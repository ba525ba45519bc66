//! Rate estimates and the small amount of binomial arithmetic the harness needs.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Width of the agreement band around an oracle prediction, in standard errors.
pub const SIGMA_BAND: f64 = 4.0;

/// Wilson score interval for `successes` out of `trials` at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so the interval always contains the point estimate
    (
        (centre - half).max(0.0).min(p),
        (centre + half).min(1.0).max(p),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl RateEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let rate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        RateEstimate {
            successes,
            trials,
            rate,
            ci_low,
            ci_high,
        }
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut hits, mut total) = (0, 0);
        for f in flags {
            total += 1;
            hits += u64::from(f);
        }
        Self::new(hits, total)
    }
}

/// Binomial standard error of a rate estimated from `samples` draws.
pub fn binomial_sigma(p: f64, samples: u64) -> f64 {
    if samples == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / samples as f64).sqrt()
}

/// Slack for rounding in oracle-computed probabilities.
const ORACLE_SLACK: f64 = 1e-9;

/// Whether `observed` lies within the agreement band of `expected`.
///
/// Degenerate predictions (`p` of 0 or 1) admit no sampled deviation.
pub fn within_band(observed: f64, expected: f64, samples: u64) -> bool {
    let sigma = binomial_sigma(expected.clamp(0.0, 1.0), samples);
    (observed - expected).abs() <= SIGMA_BAND * sigma + ORACLE_SLACK
}

/// `P(X = k)` for `X ~ Binomial(n, p)`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut ln_choose = 0.0;
    for i in 0..k {
        ln_choose += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (s, n) in [(0, 10), (10, 10), (3, 10), (9_800, 10_000), (1, 1)] {
            let est = RateEstimate::new(s, n);
            assert!(est.ci_low <= est.rate && est.rate <= est.ci_high);
            assert!(est.ci_low >= 0.0 && est.ci_high <= 1.0);
        }
        // textbook value: 5/10 → (0.2366, 0.7634)
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.2366).abs() < 1e-4 && (hi - 0.7634).abs() < 1e-4);
    }

    #[test]
    fn band_rules() {
        assert!(within_band(1.0, 1.0, 10));
        assert!(!within_band(0.999, 1.0, 10_000));
        assert!(within_band(0.26, 0.25, 10_000));
        assert!(!within_band(0.30, 0.25, 10_000));
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (0..=20).map(|k| binomial_pmf(20, k, 0.3)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((binomial_pmf(4, 2, 0.5) - 0.375).abs() < 1e-12);
        assert_eq!(binomial_pmf(3, 0, 0.0), 1.0);
        assert_eq!(binomial_pmf(3, 4, 0.5), 0.0);
    }
}
