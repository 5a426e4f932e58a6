#![allow(dead_code)]

pub mod fake_server;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force feature computation written straight from the definitions,
/// without sharing code with the library.
pub fn oracle_features(s: &[f64], bins: usize) -> [f64; 9] {
    let n = s.len();
    let nf = n as f64;

    let mut total = 0.0;
    for i in 0..n {
        total += s[i];
    }
    let mu = total / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for i in 0..n {
        let d = s[i] - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let constant = (1..n).all(|i| s[i] == s[0]);
    let var = if constant { 0.0 } else { m2 / (nf - 1.0) };
    let (skew, kurt) = if var == 0.0 {
        (0.0, 0.0)
    } else {
        ((m3 / nf) / var.powf(1.5), (m4 / nf) / (var * var) - 3.0)
    };
    let mu = if constant { s[0] } else { mu };

    let mut d1 = Vec::new();
    for i in 0..n - 1 {
        d1.push(s[i + 1] - s[i]);
    }
    let mut d1_sum = 0.0;
    for v in &d1 {
        d1_sum += v;
    }
    let d1_mean = d1_sum / d1.len() as f64;
    let mut d1_ss = 0.0;
    for v in &d1 {
        d1_ss += (v - d1_mean) * (v - d1_mean);
    }
    let d1_var = d1_ss / (nf - 2.0);

    let mut d2 = Vec::new();
    for i in 0..d1.len() - 1 {
        d2.push(d1[i + 1] - d1[i]);
    }
    let mut d2_sum = 0.0;
    for v in &d2 {
        d2_sum += v;
    }
    let d2_mean = d2_sum / d2.len() as f64;
    let mut d2_ss = 0.0;
    for v in &d2 {
        d2_ss += (v - d2_mean) * (v - d2_mean);
    }
    let d2_flat = (1..d2.len()).all(|i| d2[i] == d2[0]);
    let (d2_var, entropy, autocorr) = if d2_flat || d2_ss == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        let mut lo = d2[0];
        let mut hi = d2[0];
        for &v in &d2 {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        let mut counts = vec![0usize; bins];
        for &v in &d2 {
            let mut b = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
            if b >= bins {
                b = bins - 1;
            }
            counts[b] += 1;
        }
        let mut h = 0.0;
        for &c in &counts {
            if c > 0 {
                let p = c as f64 / d2.len() as f64;
                h -= p * p.ln();
            }
        }
        let mut num = 0.0;
        for t in 0..d2.len() - 1 {
            num += (d2[t] - d2_mean) * (d2[t + 1] - d2_mean);
        }
        (d2_ss / (nf - 3.0), h, num / d2_ss)
    };

    [mu, var, skew, kurt, d1_mean, d1_var, d2_var, entropy, autocorr]
}

/// Magnitude that absolute errors of each feature scale with.
pub fn feature_scales(s: &[f64]) -> [f64; 9] {
    let m = s.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    [m, m * m, 1.0, 1.0, m, m * m, m * m, 1.0, 1.0]
}

/// Relative error within `rel`, or absolute error negligible against the
/// feature's natural scale (for values that are zero up to rounding).
pub fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    let diff = (a - b).abs();
    diff <= rel * a.abs().max(b.abs()) || diff <= 1e-12 * scale
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random surprisal sequence of length `len` drawn from one of several
/// shapes and multiplied by a log-uniform scale in [1e-3, 1e3].
pub fn random_sequence(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    let kind = rng.random_range(0..4);
    let mut prev = rng.random_range(0.0..5.0);
    (0..len)
        .map(|_| {
            let base = match kind {
                0 => rng.random_range(0.0..10.0),
                1 => {
                    let u: f64 = rng.random_range(f64::EPSILON..1.0);
                    -u.ln() * 2.0
                }
                2 => {
                    if rng.random_bool(0.1) {
                        rng.random_range(8.0..20.0)
                    } else {
                        rng.random_range(0.0..2.0)
                    }
                }
                _ => {
                    prev = (0.8 * prev + rng.random_range(-1.0..1.0f64)).abs();
                    prev
                }
            };
            base * scale
        })
        .collect()
}

pub fn random_length(rng: &mut impl Rng) -> usize {
    if rng.random_bool(0.2) {
        rng.random_range(4..12)
    } else {
        rng.random_range(4..=1024)
    }
}

/// Logistic loss of probabilities `p` against 0/1 labels.
pub fn logloss(p: &[f64], y: &[u8]) -> f64 {
    p.iter()
        .zip(y)
        .map(|(&p, &y)| if y == 1 { -p.ln() } else { -(1.0 - p).ln() })
        .sum::<f64>()
        / p.len() as f64
}

/// AUROC by enumerating every (machine, human) pair.
pub fn pairwise_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
