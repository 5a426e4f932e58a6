mod common;

use common::{close, feature_scales, oracle_features};
use proptest::prelude::*;
use surprisal_detect::features::{extract, ExtractorConfig, FeatureError, FEATURE_NAMES};

fn sequence() -> impl Strategy<Value = Vec<f64>> {
    (4usize..300, -3.0f64..3.0).prop_flat_map(|(len, exp)| {
        let scale = 10f64.powf(exp);
        prop::collection::vec(0.0f64..15.0, len).prop_map(move |v| v.into_iter().map(|x| x * scale).collect())
    })
}

fn cfg() -> ExtractorConfig {
    ExtractorConfig::default()
}

proptest! {
    #[test]
    fn matches_brute_force(s in sequence(), bins in 2usize..40) {
        let config = ExtractorConfig::new(bins, 4).unwrap();
        let got = extract(&s, &config).unwrap().to_array();
        let want = oracle_features(&s, bins);
        let scales = feature_scales(&s);
        for k in 0..9 {
            prop_assert!(close(got[k], want[k], 1e-9, scales[k]), "{}: {} vs {}", FEATURE_NAMES[k], got[k], want[k]);
        }
    }

    #[test]
    fn first_difference_mean_telescopes(s in sequence()) {
        let v = extract(&s, &cfg()).unwrap();
        let n = s.len();
        let want = (s[n - 1] - s[0]) / (n - 1) as f64;
        prop_assert!(close(v.d1_mean, want, 1e-12, feature_scales(&s)[0]));
    }

    #[test]
    fn moments_ignore_order(s in sequence(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = s.clone();
        shuffled.shuffle(&mut common::rng(seed));
        let a = extract(&s, &cfg()).unwrap().to_array();
        let b = extract(&shuffled, &cfg()).unwrap().to_array();
        let scales = feature_scales(&s);
        for k in 0..4 {
            prop_assert!(close(a[k], b[k], 1e-9, scales[k]), "{}", FEATURE_NAMES[k]);
        }
    }

    #[test]
    fn shift_moves_only_the_mean(s in sequence(), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
        let a = extract(&s, &cfg()).unwrap().to_array();
        let b = extract(&shifted, &cfg()).unwrap().to_array();
        let scales = feature_scales(&shifted);
        prop_assert!(close(b[0], a[0] + c, 1e-12, scales[0]));
        // entropy is compared exactly when no value sits within rounding of a bin edge;
        // shifting perturbs differences by a few ulps of |c|
        for k in [1usize, 2, 3, 4, 5, 6, 8] {
            let tol = 1e-9 * (1.0 + c.abs() / scales[0].sqrt().max(1e-3));
            prop_assert!(close(a[k], b[k], tol, scales[k]), "{}: {} vs {}", FEATURE_NAMES[k], a[k], b[k]);
        }
    }

    #[test]
    fn power_of_two_scaling(s in sequence(), e in -4i32..5) {
        let a = 2f64.powi(e);
        let scaled: Vec<f64> = s.iter().map(|x| x * a).collect();
        let u = extract(&s, &cfg()).unwrap().to_array();
        let v = extract(&scaled, &cfg()).unwrap().to_array();
        let want = [u[0] * a, u[1] * a * a, u[2], u[3], u[4] * a, u[5] * a * a, u[6] * a * a, u[7], u[8]];
        prop_assert_eq!(v, want);
    }

    #[test]
    fn bounded_entropy_and_autocorrelation(s in sequence(), bins in 2usize..64) {
        let v = extract(&s, &ExtractorConfig::new(bins, 4).unwrap()).unwrap();
        prop_assert!(v.d2_entropy >= 0.0 && v.d2_entropy <= (bins as f64).ln() + 1e-12);
        prop_assert!(v.d2_autocorr.abs() <= 1.0 + 1e-12);
        prop_assert!(v.var_s >= 0.0 && v.d1_var >= 0.0 && v.d2_var >= 0.0);
    }

    #[test]
    fn deterministic(s in sequence()) {
        prop_assert_eq!(extract(&s, &cfg()).unwrap(), extract(&s, &cfg()).unwrap());
    }
}

#[test]
fn sorting_changes_temporal_features() {
    let mut rng = common::rng(11);
    for _ in 0..200 {
        let len = common::random_length(&mut rng);
        let s = common::random_sequence(&mut rng, len);
        let mut distinct = s.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 3 {
            continue;
        }
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        let a = extract(&s, &cfg()).unwrap().to_array();
        let b = extract(&sorted, &cfg()).unwrap().to_array();
        if s != sorted {
            assert!((4..9).any(|k| a[k] != b[k]), "sorting left temporal features unchanged for {s:?}");
        } else {
            let mut reversed = s.clone();
            reversed.reverse();
            let c = extract(&reversed, &cfg()).unwrap().to_array();
            assert!((4..9).any(|k| a[k] != c[k]));
        }
    }
}

#[test]
fn constant_sequences_are_flat() {
    for c in [0.0, 0.1, 1.0 / 3.0, 7.25, 1e6 + 0.1] {
        for n in [4, 5, 17, 1024] {
            let v = extract(&vec![c; n], &cfg()).unwrap().to_array();
            assert_eq!(v, [c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], "c={c} n={n}");
        }
    }
}

#[test]
fn rejects_short_and_non_finite() {
    assert!(matches!(
        extract(&[1.0, 2.0, 3.0], &cfg()),
        Err(FeatureError::TooShort { len: 3, required: 4 })
    ));
    assert!(matches!(
        extract(&[1.0, f64::NAN, 3.0, 4.0], &cfg()),
        Err(FeatureError::NonFinite { index: 1, .. })
    ));
    assert!(matches!(
        extract(&[1.0, 2.0, 3.0, f64::INFINITY], &cfg()),
        Err(FeatureError::NonFinite { index: 3, .. })
    ));
    assert!(matches!(
        extract(&[1.0; 8], &ExtractorConfig { entropy_bins: 1, min_length: 4 }),
        Err(FeatureError::InvalidConfig(_))
    ));
}

#[test]
fn minimum_length_is_configurable() {
    let config = ExtractorConfig::new(20, 10).unwrap();
    assert!(matches!(
        extract(&[1.0; 9], &config),
        Err(FeatureError::TooShort { len: 9, required: 10 })
    ));
    assert!(extract(&[1.0; 10], &config).is_ok());
}
