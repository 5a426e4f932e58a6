//! Detection metrics: per-class accuracy, their macro average, AUROC and F1.
//!
//! Label 1 is machine-generated (the positive class), label 0 human.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("both classes are required ({positives} machine, {negatives} human)")]
    DegenerateLabels { positives: usize, negatives: usize },
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("label {value} at index {index} is not 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
}

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &y)| y > 1) {
        return Err(EvalError::InvalidLabel { index, value });
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateLabels {
            positives,
            negatives,
        });
    }
    Ok((positives, negatives))
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (machine, human) pairs where the machine text scores higher, counting
/// ties as one half.
///
/// Computed from average ranks after one sort.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (positives, negatives) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks are 1-based; twice an average rank is always an integer
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let doubled_rank = (start + 1 + end) as u128;
        let tied_positives = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u128;
        doubled_rank_sum += doubled_rank * tied_positives;
        start = end;
    }
    let p = positives as u128;
    // 2U = 2 * rank sum - p(p + 1)
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok((doubled_u as f64 / 2.0) / (positives as f64 * negatives as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub human_acc: f64,
    pub machine_acc: f64,
    pub avg_acc: f64,
    pub auroc: f64,
    pub f1: f64,
    pub n_human: usize,
    pub n_machine: usize,
    pub threshold: f64,
}

/// Thresholded metrics plus AUROC. A score at or above `threshold` is a
/// machine prediction.
pub fn classification_report(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<EvalReport, EvalError> {
    let (n_machine, n_human) = check(scores, labels)?;
    let (mut tp, mut tn, mut fp) = (0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => {}
        }
    }
    let human_acc = tn as f64 / n_human as f64;
    let machine_acc = tp as f64 / n_machine as f64;
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = machine_acc;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        human_acc,
        machine_acc,
        avg_acc: (human_acc + machine_acc) / 2.0,
        auroc: auroc(scores, labels)?,
        f1,
        n_human,
        n_machine,
        threshold,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>10}", "metric", "value")?;
        writeln!(f, "{:<12} {:>10.4}", "HumanAcc", self.human_acc)?;
        writeln!(f, "{:<12} {:>10.4}", "MachineAcc", self.machine_acc)?;
        writeln!(f, "{:<12} {:>10.4}", "AvgAcc", self.avg_acc)?;
        writeln!(f, "{:<12} {:>10.4}", "AUROC", self.auroc)?;
        writeln!(f, "{:<12} {:>10.4}", "F1", self.f1)?;
        writeln!(f, "{:<12} {:>10}", "n_human", self.n_human)?;
        writeln!(f, "{:<12} {:>10}", "n_machine", self.n_machine)?;
        write!(f, "{:<12} {:>10}", "threshold", self.threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_tied_auroc() {
        assert_eq!(auroc(&[0.1, 0.9], &[0, 1]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.9, 0.1], &[0, 1]).unwrap(), 0.0);
        assert_eq!(auroc(&[0.3; 6], &[0, 1, 1, 0, 1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn partial_ties() {
        // pairs (pos, neg): (0.5, 0.5) tie, (0.5, 0.2) win, (0.9, both) wins
        let a = auroc(&[0.5, 0.2, 0.5, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(a, 3.5 / 4.0);
    }

    #[test]
    fn auroc_errors() {
        assert!(matches!(auroc(&[0.1, 0.2], &[1, 1]), Err(EvalError::DegenerateLabels { .. })));
        assert!(matches!(auroc(&[0.1], &[1, 0]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(auroc(&[f64::NAN, 0.2], &[0, 1]), Err(EvalError::NonFiniteScore(0))));
    }

    #[test]
    fn perfect_report() {
        let r = classification_report(&[0.9, 0.9, 0.1, 0.1], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((r.human_acc, r.machine_acc, r.avg_acc, r.f1, r.auroc), (1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!((r.n_human, r.n_machine), (2, 2));
    }

    #[test]
    fn all_human_predictor() {
        let r = classification_report(&[0.0, 0.0], &[1, 0], 0.5).unwrap();
        assert_eq!((r.human_acc, r.machine_acc, r.avg_acc, r.f1), (1.0, 0.0, 0.5, 0.0));
    }

    #[test]
    fn threshold_is_inclusive() {
        let r = classification_report(&[0.5, 0.49], &[1, 0], 0.5).unwrap();
        assert_eq!(r.machine_acc, 1.0);
        assert_eq!(r.human_acc, 1.0);
    }

    #[test]
    fn table_lists_every_metric() {
        let r = classification_report(&[0.9, 0.1], &[1, 0], 0.5).unwrap();
        let table = r.to_string();
        for label in ["HumanAcc", "MachineAcc", "AvgAcc", "AUROC", "F1"] {
            assert!(table.contains(label));
        }
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["avg_acc"], 1.0);
    }
}
