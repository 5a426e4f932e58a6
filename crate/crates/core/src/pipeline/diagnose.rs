//! Per-class summaries of mean surprisal and surprisal variance.

use serde::{Deserialize, Serialize};

use super::{FeatureTable, PipelineError};

pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample variance (n−1); 0 for a single value.
    pub variance: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear interpolation between closest ranks.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            count: values.len(),
            mean,
            variance,
            min: sorted[0],
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Fixed-width histogram shared by both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub human: Vec<usize>,
    pub machine: Vec<usize>,
}

impl Histogram {
    fn build(human: &[f64], machine: &[f64], bins: usize) -> Self {
        let all = human.iter().chain(machine);
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
        let count = |values: &[f64]| {
            let mut counts = vec![0; bins];
            for &v in values {
                let i = if width > 0.0 {
                    (((v - lo) / width).floor() as usize).min(bins - 1)
                } else {
                    0
                };
                counts[i] += 1;
            }
            counts
        };
        Self {
            edges,
            human: count(human),
            machine: count(machine),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub label: u8,
    pub mu_s: Summary,
    pub var_s: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub human: CohortSummary,
    pub machine: CohortSummary,
    pub mu_s_histogram: Histogram,
    pub var_s_histogram: Histogram,
}

impl DiagnosticsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Summarizes `mu_s` and `var_s` separately for human (0) and machine (1)
/// examples. Unlabeled rows are ignored.
pub fn diagnose(table: &FeatureTable, bins: usize) -> Result<DiagnosticsReport, PipelineError> {
    if table.is_empty() {
        return Err(PipelineError::NoUsableExamples(format!(
            "no feature rows ({} skipped)",
            table.skipped.len()
        )));
    }
    let bins = bins.max(1);
    let mut mu = [Vec::new(), Vec::new()];
    let mut var = [Vec::new(), Vec::new()];
    for (i, label) in table.labels.iter().enumerate() {
        if let Some(l) = label {
            let v = table.diversity(i);
            mu[*l as usize].push(v.mu_s);
            var[*l as usize].push(v.var_s);
        }
    }
    if mu[0].is_empty() || mu[1].is_empty() {
        return Err(PipelineError::DegenerateLabels {
            machine: mu[1].len(),
            human: mu[0].len(),
        });
    }
    let cohort = |l: usize| CohortSummary {
        label: l as u8,
        mu_s: Summary::of(&mu[l]),
        var_s: Summary::of(&var[l]),
    };
    Ok(DiagnosticsReport {
        human: cohort(0),
        machine: cohort(1),
        mu_s_histogram: Histogram::build(&mu[0], &mu[1], bins),
        var_s_histogram: Histogram::build(&var[0], &var[1], bins),
    })
}
