//! Seeded synthetic surprisal cohorts.
//!
//! Human-like sequences switch between a calm regime and persistent bursts
//! of very surprising tokens, so they are dispersed, right-skewed and
//! heavy-tailed with clustered second-order structure. Machine-like
//! sequences are a smooth low-noise AR(1) around a lower mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};

use crate::pipeline::{Dataset, LabeledExample};
use crate::provider::LogprobRecord;

pub const HUMAN: u8 = 0;
pub const MACHINE: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticText {
    pub id: String,
    pub label: u8,
    pub surprisal: Vec<f64>,
}

impl SyntheticText {
    /// A cache record whose surprisal sequence is exactly `self.surprisal`
    /// (the leading token has no logprob).
    pub fn to_record(&self, model_name: &str) -> LogprobRecord {
        let n = self.surprisal.len() + 1;
        let mut logprobs = Vec::with_capacity(n);
        logprobs.push(None);
        logprobs.extend(self.surprisal.iter().map(|s| Some(-s)));
        LogprobRecord {
            id: self.id.clone(),
            model_name: model_name.to_owned(),
            tokens: (0..n).map(|i| format!("tok{i}")).collect(),
            logprobs,
            truncated: false,
        }
    }
}

pub fn human_like(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let calm = Gamma::new(2.0, 1.6).expect("valid gamma");
    let spike = Exp::new(0.25).expect("valid rate");
    let mut bursting = false;
    (0..len)
        .map(|_| {
            bursting = if bursting { rng.random_bool(0.6) } else { rng.random_bool(0.08) };
            let base = calm.sample(rng);
            if bursting {
                base + spike.sample(rng)
            } else {
                base
            }
        })
        .collect()
}

pub fn machine_like(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let level = Normal::new(2.0f64, 0.3).expect("valid normal").sample(rng).max(0.5);
    let noise = Normal::new(0.0, 0.35).expect("valid normal");
    let mut x = level;
    (0..len)
        .map(|_| {
            x = level + 0.85 * (x - level) + noise.sample(rng);
            x.abs()
        })
        .collect()
}

fn lengths(rng: &mut impl Rng) -> usize {
    rng.random_range(48..=512)
}

/// `per_class` human-like and `per_class` machine-like texts, interleaved.
pub fn cohort(per_class: usize, seed: u64) -> Vec<SyntheticText> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..per_class {
        let len = lengths(&mut rng);
        out.push(SyntheticText {
            id: format!("h{i:05}"),
            label: HUMAN,
            surprisal: human_like(&mut rng, len),
        });
        let len = lengths(&mut rng);
        out.push(SyntheticText {
            id: format!("m{i:05}"),
            label: MACHINE,
            surprisal: machine_like(&mut rng, len),
        });
    }
    out
}

/// Cohorts whose value multisets come from one distribution and differ only
/// in ordering: human-like texts keep random order, machine-like texts are
/// sorted within short windows, which smooths their first and second
/// differences.
pub fn temporal_only_cohort(per_class: usize, seed: u64) -> Vec<SyntheticText> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Gamma::new(2.0, 1.5).expect("valid gamma");
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let len = lengths(&mut rng);
        let mut values: Vec<f64> = (0..len).map(|_| dist.sample(&mut rng)).collect();
        let label = (i % 2) as u8;
        if label == MACHINE {
            for window in values.chunks_mut(16) {
                window.sort_by(f64::total_cmp);
            }
        }
        out.push(SyntheticText {
            id: format!("t{i:05}"),
            label,
            surprisal: values,
        });
    }
    out
}

/// Labeled examples without text or features; pair with [`records`].
pub fn dataset(texts: &[SyntheticText]) -> Dataset {
    let examples = texts
        .iter()
        .map(|t| LabeledExample {
            id: t.id.clone(),
            text: None,
            label: Some(t.label),
            detector_scores: Vec::new(),
            features: None,
        })
        .collect();
    Dataset::new(examples).expect("synthetic ids are unique")
}

pub fn records(texts: &[SyntheticText], model_name: &str) -> Vec<LogprobRecord> {
    texts.iter().map(|t| t.to_record(model_name)).collect()
}
