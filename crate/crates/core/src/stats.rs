//! Detection statistics: bit accuracy, FPR-calibrated thresholds, TPR, and
//! central/non-central chi-squared CDFs.
//!
//! Threshold rule (frozen for reproducibility): the decision is a strict
//! inequality, and the calibrated value is an order statistic of the negative
//! scores — for greater-is-positive, the smallest negative value v with
//! |{s > v}| / N <= target_fpr; mirrored for less-is-positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("bit strings differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 100 calibration negatives, got {0}")]
    TooFewNegatives(usize),
    #[error("target FPR must be in (0, 1), got {0}")]
    BadFpr(f64),
    #[error("FPR resolution insufficient: {n} negatives cannot realize FPR {fpr} (n*fpr < 1)")]
    FprGranularity { n: usize, fpr: f64 },
    #[error("empty score set")]
    EmptyScores,
}

/// Fraction of matching positions.
pub fn bit_accuracy(decoded: &[u8], truth: &[u8]) -> Result<f64, StatsError> {
    if decoded.len() != truth.len() {
        return Err(StatsError::LengthMismatch(decoded.len(), truth.len()));
    }
    let matches = decoded.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(matches as f64 / decoded.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    GreaterIsPositive,
    LessIsPositive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Threshold {
    pub codec_id: String,
    pub value: f64,
    pub direction: Direction,
    pub target_fpr: f64,
    pub negatives_used: usize,
    /// FPR realized on the calibration negatives themselves.
    pub achieved_fpr: f64,
}

impl Threshold {
    /// Strict decision rule.
    pub fn is_positive(&self, score: f64) -> bool {
        match self.direction {
            Direction::GreaterIsPositive => score > self.value,
            Direction::LessIsPositive => score < self.value,
        }
    }
}

pub fn calibrate_threshold(
    codec_id: &str,
    negatives: &[f64],
    direction: Direction,
    target_fpr: f64,
) -> Result<Threshold, StatsError> {
    let n = negatives.len();
    if n < 100 {
        return Err(StatsError::TooFewNegatives(n));
    }
    if !(0.0..1.0).contains(&target_fpr) || target_fpr <= 0.0 {
        return Err(StatsError::BadFpr(target_fpr));
    }
    let allowed = (target_fpr * n as f64 + 1e-9).floor() as usize;
    if allowed == 0 {
        return Err(StatsError::FprGranularity { n, fpr: target_fpr });
    }
    let mut sorted = negatives.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let value = match direction {
        Direction::GreaterIsPositive => sorted[n - allowed - 1],
        Direction::LessIsPositive => sorted[allowed],
    };
    let exceed = match direction {
        Direction::GreaterIsPositive => sorted.iter().filter(|&&s| s > value).count(),
        Direction::LessIsPositive => sorted.iter().filter(|&&s| s < value).count(),
    };
    Ok(Threshold {
        codec_id: codec_id.to_string(),
        value,
        direction,
        target_fpr,
        negatives_used: n,
        achieved_fpr: exceed as f64 / n as f64,
    })
}

pub fn tpr_at_threshold(positives: &[f64], threshold: &Threshold) -> Result<f64, StatsError> {
    if positives.is_empty() {
        return Err(StatsError::EmptyScores);
    }
    let hits = positives.iter().filter(|&&s| threshold.is_positive(s)).count();
    Ok(hits as f64 / positives.len() as f64)
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// ln Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection for small arguments
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series representation
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > sum.abs() * 1e-17 && n < 1e6 {
            term *= x / (a + n);
            sum += term;
            n += 1.0;
        }
        (sum.ln() + a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q(a, x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut i = 1.0;
        loop {
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 || i > 1e6 {
                break;
            }
            i += 1.0;
        }
        let q = (a * x.ln() - x - ln_gamma(a)).exp() * h;
        1.0 - q
    }
}

/// Central chi-squared CDF, df > 0 real.
pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    gamma_p(df / 2.0, x / 2.0)
}

/// Non-central chi-squared CDF via the Poisson mixture
/// sum_j pois(j; lambda/2) * chi2_cdf(x, df + 2j), expanded outward from the
/// Poisson mode and truncated when the remaining mass is below 1e-12.
pub fn noncentral_chi2_cdf(x: f64, df: f64, lambda: f64) -> f64 {
    debug_assert!(df > 0.0 && lambda >= 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return chi2_cdf(x, df);
    }
    let half = lambda / 2.0;
    let j0 = half.floor() as i64;
    let log_p0 = -half + j0 as f64 * half.ln() - ln_gamma(j0 as f64 + 1.0);
    let p0 = log_p0.exp();

    let mut acc = p0 * chi2_cdf(x, df + 2.0 * j0 as f64);
    let mut mass = p0;

    // upward from the mode
    let mut p = p0;
    let mut j = j0;
    while mass < 1.0 - 1e-12 {
        j += 1;
        p *= half / j as f64;
        if p == 0.0 {
            break;
        }
        acc += p * chi2_cdf(x, df + 2.0 * j as f64);
        mass += p;
        // downward term interleaved so both tails drain
        let down_idx = 2 * j0 - j;
        if down_idx >= 0 {
            let jd = down_idx;
            // pmf(jd) from pmf(jd+1): p_jd = p_{jd+1} * (jd+1) / half
            // recompute directly in log space to avoid drift on long walks
            let lp = -half + jd as f64 * half.ln() - ln_gamma(jd as f64 + 1.0);
            let pd = lp.exp();
            acc += pd * chi2_cdf(x, df + 2.0 * jd as f64);
            mass += pd;
        }
        if j - j0 > 40_000 {
            break;
        }
    }
    acc.min(1.0)
}

/// Kolmogorov-Smirnov statistic against Uniform(0, 1).
pub fn ks_uniform_statistic(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite p-values"));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let hi = (i as f64 + 1.0) / n - p;
            let lo = p - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

/// Linear-interpolated empirical quantile (values 1..100 at p=0.1 give 10.9).
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_accuracy_basics() {
        assert_eq!(bit_accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(bit_accuracy(&[1, 0, 1], &[0, 1, 0]).unwrap(), 0.0);
        assert!(bit_accuracy(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn bit_accuracy_of_independent_strings_is_half() {
        use crate::key::{random_payload, WatermarkKey};
        let a = random_payload(&WatermarkKey::from_u64(1, "a"), 10_000).unwrap();
        let b = random_payload(&WatermarkKey::from_u64(2, "b"), 10_000).unwrap();
        let ba = bit_accuracy(a.bits(), b.bits()).unwrap();
        assert!((ba - 0.5).abs() < 0.02, "ba {ba}");
    }

    #[test]
    fn threshold_order_statistic_rule() {
        let negatives: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let t = calibrate_threshold("x", &negatives, Direction::GreaterIsPositive, 0.01).unwrap();
        assert_eq!(t.value, 99.0);
        assert_eq!(t.achieved_fpr, 0.01);
        let t2 = calibrate_threshold("x", &negatives, Direction::LessIsPositive, 0.01).unwrap();
        assert_eq!(t2.value, 2.0);
        assert_eq!(t2.achieved_fpr, 0.01);
    }

    #[test]
    fn all_equal_negatives_give_zero_fpr() {
        let negatives = vec![5.0; 200];
        let t = calibrate_threshold("x", &negatives, Direction::GreaterIsPositive, 0.01).unwrap();
        assert_eq!(t.value, 5.0);
        assert_eq!(t.achieved_fpr, 0.0);
    }

    #[test]
    fn granularity_guard() {
        let negatives = vec![0.0; 100];
        // n*fpr = 0.5 < 1: only FPR 0 achievable, flag it
        match calibrate_threshold("x", &negatives, Direction::GreaterIsPositive, 0.005) {
            Err(StatsError::FprGranularity { n: 100, .. }) => {}
            other => panic!("expected granularity error, got {other:?}"),
        }
        let few = vec![0.0; 50];
        assert!(matches!(
            calibrate_threshold("x", &few, Direction::GreaterIsPositive, 0.01),
            Err(StatsError::TooFewNegatives(50))
        ));
    }

    #[test]
    fn tpr_is_strict() {
        let negatives: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let t = calibrate_threshold("x", &negatives, Direction::GreaterIsPositive, 0.01).unwrap();
        // all positives exactly at the threshold: strict rule says none fire
        assert_eq!(tpr_at_threshold(&vec![99.0; 10], &t).unwrap(), 0.0);
        assert_eq!(tpr_at_threshold(&vec![99.5; 10], &t).unwrap(), 1.0);
        let mixed = [98.0, 99.0, 99.1, 100.0, 120.0, 12.0, 99.0001, 98.9999, 99.0, 101.0];
        // strictly above 99: 99.1, 100, 120, 99.0001, 101 -> 5 of 10
        assert_eq!(tpr_at_threshold(&mixed, &t).unwrap(), 0.5);
    }

    #[test]
    fn calibration_self_consistency() {
        // TPR measured on the calibration negatives themselves stays <= fpr.
        use crate::key::WatermarkKey;
        let mut s = WatermarkKey::from_u64(8, "stats").stream(0);
        let negatives = s.normals(500);
        for direction in [Direction::GreaterIsPositive, Direction::LessIsPositive] {
            let t = calibrate_threshold("x", &negatives, direction, 0.01).unwrap();
            let tpr = tpr_at_threshold(&negatives, &t).unwrap();
            assert!(tpr <= 0.01 + 1e-12, "tpr {tpr}");
        }
    }

    #[test]
    fn chi2_cdf_closed_forms() {
        assert_eq!(chi2_cdf(0.0, 3.0), 0.0);
        // df=2 is Exp(1/2): median at 2 ln 2
        let median = chi2_cdf(2.0 * (2.0f64).ln(), 2.0);
        assert!((median - 0.5).abs() < 1e-12, "median {median}");
        // chi2_5 median (spec pins 0.5 within 5e-4 at x = 4.351)
        let m5 = chi2_cdf(4.351, 5.0);
        assert!((m5 - 0.5).abs() < 5e-4, "chi2_5 at 4.351: {m5}");
    }

    /// High-precision reference values (mpmath, 50 digits): absolute error
    /// must stay below 1e-10.
    #[test]
    fn chi2_cdf_reference_values() {
        let cases = [
            (0.5f64, 1.0f64, 0.5204998778130465376827_f64),
            (1.0, 1.0, 0.6826894921370858971705),
            (5.0, 4.0, 0.7127025048163542169066),
            (10.0, 10.0, 0.5595067149347875885574),
            (30.0, 10.0, 0.9991433587892246996079),
            (2.0, 7.5, 0.02779916485562011396547),
            (123.4, 77.0, 0.9993747934851854356245),
            (0.001, 0.5, 0.1649597507684128369113),
        ];
        for (x, df, want) in cases {
            let got = chi2_cdf(x, df);
            assert!((got - want).abs() < 1e-10, "x={x} df={df}: {got} vs {want}");
        }
    }

    #[test]
    fn noncentral_degenerates_to_central() {
        for (x, df) in [(1.0, 2.0), (7.3, 5.0), (40.0, 16.0)] {
            let a = noncentral_chi2_cdf(x, df, 0.0);
            let b = chi2_cdf(x, df);
            assert!((a - b).abs() < 1e-10, "x={x} df={df}: {a} vs {b}");
        }
        assert_eq!(noncentral_chi2_cdf(0.0, 4.0, 3.0), 0.0);
    }

    #[test]
    fn noncentral_is_monotone_and_bounded() {
        let mut prev = 0.0;
        for i in 0..60 {
            let x = i as f64 * 2.5;
            let v = noncentral_chi2_cdf(x, 16.0, 25.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-12, "non-monotone at {x}");
            prev = v;
        }
        // large-lambda regime exercises the mode-centered expansion
        let v = noncentral_chi2_cdf(1800.0, 700.0, 1200.0);
        assert!((0.0..=1.0).contains(&v) && v > 0.1 && v < 0.9, "v={v}");
    }

    #[test]
    fn ks_statistic_of_perfect_grid_is_small() {
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_uniform_statistic(&grid) < 1e-3);
        let shifted: Vec<f64> = grid.iter().map(|p| p * 0.5).collect();
        assert!(ks_uniform_statistic(&shifted) > 0.4);
    }

    #[test]
    fn quantile_convention_matches_spec() {
        let values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert!((quantile_linear(&values, 0.1) - 10.9).abs() < 1e-12);
        assert!((quantile_linear(&values, 0.9) - 90.1).abs() < 1e-12);
    }
}
