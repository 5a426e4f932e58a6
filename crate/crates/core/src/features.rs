//! Surprisal diversity features.
//!
//! A [`DiversityVector`] summarizes one surprisal sequence with nine
//! statistics, always laid out in the same order:
//!
//! | index | name          | meaning                                      |
//! |-------|---------------|----------------------------------------------|
//! | 0     | `mu_s`        | mean surprisal                               |
//! | 1     | `var_s`       | sample variance of surprisal (n−1)           |
//! | 2     | `skew`        | skewness                                     |
//! | 3     | `kurt`        | excess kurtosis                              |
//! | 4     | `d1_mean`     | mean of first differences                    |
//! | 5     | `d1_var`      | sample variance of first differences         |
//! | 6     | `d2_var`      | variance of second differences (n−3)         |
//! | 7     | `d2_entropy`  | histogram entropy of second differences      |
//! | 8     | `d2_autocorr` | lag-1 autocorrelation of second differences  |
//!
//! The first four describe the distribution of surprisal values, the next
//! two the first-order differences `S[t] - S[t-1]`, and the last three the
//! second-order differences. All arithmetic is two-pass `f64`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of features in a [`DiversityVector`].
pub const FEATURE_COUNT: usize = 9;

/// Feature names in serialization order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mu_s",
    "var_s",
    "skew",
    "kurt",
    "d1_mean",
    "d1_var",
    "d2_var",
    "d2_entropy",
    "d2_autocorr",
];

/// Indices of the distributional block (`mu_s`, `var_s`, `skew`, `kurt`).
pub const DISTRIBUTION_FEATURES: std::ops::Range<usize> = 0..4;
/// Indices of the first-order block.
pub const FIRST_ORDER_FEATURES: std::ops::Range<usize> = 4..6;
/// Indices of the second-order block.
pub const SECOND_ORDER_FEATURES: std::ops::Range<usize> = 6..9;

/// Shortest sequence from which every feature is defined.
pub const MIN_SEQUENCE_LEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sequence too short: {len} values, at least {required} required")]
    TooShort { len: usize, required: usize },
    #[error("non-finite surprisal value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid extractor config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    /// Equal-width bins used for the second-difference entropy.
    pub entropy_bins: usize,
    /// Sequences shorter than this are rejected by [`extract`].
    pub min_length: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            entropy_bins: 20,
            min_length: MIN_SEQUENCE_LEN,
        }
    }
}

impl ExtractorConfig {
    pub fn new(entropy_bins: usize, min_length: usize) -> Result<Self, FeatureError> {
        let config = Self {
            entropy_bins,
            min_length,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.entropy_bins < 2 {
            return Err(FeatureError::InvalidConfig(format!(
                "entropy_bins must be at least 2, got {}",
                self.entropy_bins
            )));
        }
        if self.min_length < MIN_SEQUENCE_LEN {
            return Err(FeatureError::InvalidConfig(format!(
                "min_length must be at least {MIN_SEQUENCE_LEN}, got {}",
                self.min_length
            )));
        }
        Ok(())
    }
}

/// The nine diversity statistics of one surprisal sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityVector {
    pub mu_s: f64,
    pub var_s: f64,
    pub skew: f64,
    pub kurt: f64,
    pub d1_mean: f64,
    pub d1_var: f64,
    pub d2_var: f64,
    pub d2_entropy: f64,
    pub d2_autocorr: f64,
}

impl DiversityVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.mu_s,
            self.var_s,
            self.skew,
            self.kurt,
            self.d1_mean,
            self.d1_var,
            self.d2_var,
            self.d2_entropy,
            self.d2_autocorr,
        ]
    }

    pub fn from_array(values: [f64; FEATURE_COUNT]) -> Self {
        let [mu_s, var_s, skew, kurt, d1_mean, d1_var, d2_var, d2_entropy, d2_autocorr] = values;
        Self {
            mu_s,
            var_s,
            skew,
            kurt,
            d1_mean,
            d1_var,
            d2_var,
            d2_entropy,
            d2_autocorr,
        }
    }

    /// Builds a vector from a slice of exactly nine values.
    pub fn from_slice(values: &[f64]) -> Option<Self> {
        let array: [f64; FEATURE_COUNT] = values.try_into().ok()?;
        Some(Self::from_array(array))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Distributional moments of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skew: f64,
    pub kurt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrder {
    pub variance: f64,
    pub entropy: f64,
    pub autocorr: f64,
}

fn require_len(values: &[f64], required: usize) -> Result<(), FeatureError> {
    if values.len() < required {
        return Err(FeatureError::TooShort {
            len: values.len(),
            required,
        });
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<(), FeatureError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(FeatureError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sum of squared deviations from `center`.
fn sum_sq_dev(values: &[f64], center: f64) -> f64 {
    values.iter().map(|v| (v - center) * (v - center)).sum()
}

fn differences(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Mean, sample variance, skewness and excess kurtosis.
///
/// Skewness and kurtosis standardize by the square root of the sample
/// variance. A constant input has mean equal to its value and zero for the
/// other three.
pub fn moments(values: &[f64]) -> Result<Moments, FeatureError> {
    require_len(values, 2)?;
    check_finite(values)?;
    if values.iter().all(|&v| v == values[0]) {
        return Ok(Moments {
            mean: values[0],
            variance: 0.0,
            skew: 0.0,
            kurt: 0.0,
        });
    }
    let n = values.len() as f64;
    let mu = mean(values);
    let variance = sum_sq_dev(values, mu) / (n - 1.0);
    if variance == 0.0 {
        return Ok(Moments {
            mean: mu,
            variance,
            skew: 0.0,
            kurt: 0.0,
        });
    }
    let sigma = variance.sqrt();
    let (mut third, mut fourth) = (0.0, 0.0);
    for v in values {
        let z = (v - mu) / sigma;
        let z2 = z * z;
        third += z2 * z;
        fourth += z2 * z2;
    }
    Ok(Moments {
        mean: mu,
        variance,
        skew: third / n,
        kurt: fourth / n - 3.0,
    })
}

/// Mean and sample variance of the first differences.
pub fn first_order(values: &[f64]) -> Result<FirstOrder, FeatureError> {
    require_len(values, 3)?;
    check_finite(values)?;
    let diffs = differences(values);
    let mu = mean(&diffs);
    let variance = sum_sq_dev(&diffs, mu) / (diffs.len() - 1) as f64;
    Ok(FirstOrder { mean: mu, variance })
}

/// Variance, histogram entropy and lag-1 autocorrelation of the second
/// differences.
pub fn second_order(values: &[f64], config: &ExtractorConfig) -> Result<SecondOrder, FeatureError> {
    config.validate()?;
    require_len(values, MIN_SEQUENCE_LEN)?;
    check_finite(values)?;
    let d2 = differences(&differences(values));
    Ok(second_order_of_differences(&d2, config.entropy_bins))
}

/// Statistics over an already-computed second-difference sequence of
/// length at least 2.
pub(crate) fn second_order_of_differences(d2: &[f64], bins: usize) -> SecondOrder {
    debug_assert!(d2.len() >= 2);
    let mu = mean(d2);
    let ss = sum_sq_dev(d2, mu);
    if ss == 0.0 || d2.iter().all(|&v| v == d2[0]) {
        return SecondOrder {
            variance: 0.0,
            entropy: 0.0,
            autocorr: 0.0,
        };
    }
    // n - 3 == d2.len() - 1
    let variance = ss / (d2.len() - 1) as f64;
    let lagged: f64 = d2.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).sum();
    SecondOrder {
        variance,
        entropy: histogram_entropy(d2, bins),
        autocorr: lagged / ss,
    }
}

/// Shannon entropy (nats) of an equal-width histogram spanning the
/// observed range. The maximum lands in the last bin.
pub fn histogram_entropy(values: &[f64], bins: usize) -> f64 {
    if values.is_empty() || bins == 0 {
        return 0.0;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        let index = ((v - lo) / range * bins as f64).floor();
        // NaN-free here; cast saturates below at 0
        let index = (index as usize).min(bins - 1);
        counts[index] += 1;
    }
    let total = values.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Computes the full [`DiversityVector`] for a surprisal sequence.
pub fn extract(values: &[f64], config: &ExtractorConfig) -> Result<DiversityVector, FeatureError> {
    config.validate()?;
    require_len(values, config.min_length)?;
    check_finite(values)?;
    let m = moments(values)?;
    let d1 = differences(values);
    let d1_mean = mean(&d1);
    let d1_var = sum_sq_dev(&d1, d1_mean) / (d1.len() - 1) as f64;
    let d2 = differences(&d1);
    let s = second_order_of_differences(&d2, config.entropy_bins);
    Ok(DiversityVector {
        mu_s: m.mean,
        var_s: m.variance,
        skew: m.skew,
        kurt: m.kurt,
        d1_mean,
        d1_var,
        d2_var: s.variance,
        d2_entropy: s.entropy,
        d2_autocorr: s.autocorr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExtractorConfig {
        ExtractorConfig::default()
    }

    #[test]
    fn moments_of_one_to_five() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.variance, 2.5);
        assert_eq!(m.skew, 0.0);
        // (16 + 1 + 0 + 1 + 16) / 6.25 / 5 - 3
        assert!((m.kurt - (34.0 / 6.25 / 5.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_moments_are_zero() {
        let m = moments(&[2.0; 4]).unwrap();
        assert_eq!(
            m,
            Moments {
                mean: 2.0,
                variance: 0.0,
                skew: 0.0,
                kurt: 0.0
            }
        );
    }

    #[test]
    fn length_requirements() {
        assert_eq!(
            moments(&[1.0]),
            Err(FeatureError::TooShort {
                len: 1,
                required: 2
            })
        );
        assert!(matches!(
            first_order(&[1.0, 2.0]),
            Err(FeatureError::TooShort { required: 3, .. })
        ));
        assert!(matches!(
            second_order(&[1.0, 2.0, 3.0], &cfg()),
            Err(FeatureError::TooShort { required: 4, .. })
        ));
        assert_eq!(
            extract(&[1.0, 2.0, 3.0], &cfg()),
            Err(FeatureError::TooShort {
                len: 3,
                required: 4
            })
        );
    }

    #[test]
    fn custom_min_length_is_reported() {
        let config = ExtractorConfig::new(20, 8).unwrap();
        assert_eq!(
            extract(&[1.0; 6], &config),
            Err(FeatureError::TooShort {
                len: 6,
                required: 8
            })
        );
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ExtractorConfig::new(1, 4).is_err());
        assert!(ExtractorConfig::new(20, 3).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let err = extract(&[1.0, f64::NAN, 2.0, 3.0], &cfg()).unwrap_err();
        assert!(matches!(err, FeatureError::NonFinite { index: 1, .. }));
    }

    #[test]
    fn linear_sequence_has_flat_differences() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let d1 = first_order(&v).unwrap();
        assert_eq!((d1.mean, d1.variance), (1.0, 0.0));
        let d2 = second_order(&v, &cfg()).unwrap();
        assert_eq!((d2.variance, d2.entropy, d2.autocorr), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_level_second_differences() {
        let s = second_order_of_differences(&[0.0, 0.0, 1.0, 1.0], 20);
        assert!((s.entropy - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((s.autocorr - 0.25).abs() < 1e-12);
        assert!((s.variance - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_second_differences() {
        let s = second_order_of_differences(&[1.0, -1.0, 1.0, -1.0], 20);
        assert!((s.autocorr + 0.75).abs() < 1e-12);
        assert!((s.entropy - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn surprisal_yielding_two_level_second_differences() {
        // second differences of [0, 0, 0, 1, 3] are [0, 1, 1]
        let s = second_order(&[0.0, 0.0, 0.0, 1.0, 3.0], &cfg()).unwrap();
        let p: f64 = 1.0 / 3.0;
        let expected = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((s.entropy - expected).abs() < 1e-12);
    }

    #[test]
    fn length_four_uses_single_lag_pair() {
        // d2 = [1, -3]: mean -1, deviations [2, -2]
        let s = second_order(&[0.0, 0.0, 1.0, -1.0], &cfg()).unwrap();
        assert!((s.autocorr + 0.5).abs() < 1e-12);
        assert!((s.variance - 8.0).abs() < 1e-12);
        assert!((s.entropy - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn constant_sequence() {
        for c in [0.0, 1.5, 7.25] {
            let v = extract(&[c; 5], &cfg()).unwrap();
            assert_eq!(v.to_array(), [c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn entropy_of_uniform_spread_hits_upper_bound() {
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let h = histogram_entropy(&values, 20);
        assert!((h - (20f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn vector_array_round_trip() {
        let arr = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert_eq!(DiversityVector::from_array(arr).to_array(), arr);
        assert!(DiversityVector::from_slice(&arr[..8]).is_none());
    }
}
