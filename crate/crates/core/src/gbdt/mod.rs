//! Gradient-boosted regression trees for binary classification.
//!
//! Logistic loss, Newton leaf weights `-G / (H + lambda)`, exact greedy
//! split search over midpoints of distinct sorted feature values. Rows route
//! left when `value < threshold`.
//!
//! Training is bit-deterministic: row and column subsamples come from a
//! ChaCha8 stream seeded by `(random_state, round)` (see [`sampling`]), and
//! split search resolves equal gains towards the lowest feature index and
//! then the smallest threshold, whatever the number of worker threads.

mod io;
mod params;
pub mod sampling;
mod train;

pub use io::{load, save, FORMAT_VERSION};
pub use params::{GbdtParams, ScalePosWeight};
pub use train::{resolve_scale_pos_weight, train};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("labels must contain both classes ({positives} positive, {negatives} negative)")]
    DegenerateLabels { positives: usize, negatives: usize },
    #[error("label {value} at row {row} is not 0 or 1")]
    InvalidLabel { row: usize, value: u8 },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("expected {expected} features per row, got {got} (row {row})")]
    WidthMismatch { expected: usize, got: usize, row: usize },
    #[error("training set needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("model format version {found} is not supported (expected {supported})")]
    VersionMismatch { found: u64, supported: u64 },
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One node of a regression tree. Children are indices into the owning
/// tree's node list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Regularized loss reduction of this split (after `gamma`).
        gain: f64,
        /// Hessian sum of the rows reaching this node.
        cover: f64,
    },
    Leaf {
        /// Output already scaled by the learning rate.
        weight: f64,
        cover: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        debug_assert!(!nodes.is_empty());
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_stump_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Index of the leaf that `row` lands in.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { weight, .. } => weight,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// A trained ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub format_version: u64,
    pub feature_names: Vec<String>,
    pub base_score_logit: f64,
    pub params: GbdtParams,
    /// The positive-class gradient multiplier actually used in training.
    pub scale_pos_weight_used: f64,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin).exp())
}

/// Largest `f64` strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

impl GbdtModel {
    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Raw logit using only the first `n_trees` trees.
    pub fn margin_with_trees(&self, row: &[f64], n_trees: usize) -> f64 {
        self.base_score_logit
            + self
                .trees
                .iter()
                .take(n_trees)
                .map(|t| t.predict(row))
                .sum::<f64>()
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.margin_with_trees(row, self.trees.len())
    }

    /// Probability of the positive (machine-generated) class, kept strictly
    /// inside `(0, 1)`.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, GbdtError> {
        if row.len() != self.num_features() {
            return Err(GbdtError::WidthMismatch {
                expected: self.num_features(),
                got: row.len(),
                row: 0,
            });
        }
        Ok(sigmoid(self.margin(row)).clamp(f64::MIN_POSITIVE, BELOW_ONE))
    }

    /// Total split gain per feature, normalized to sum to 1. All zeros when
    /// the model has no splits.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let mut totals = vec![0.0; self.num_features()];
        for tree in &self.trees {
            for node in tree.nodes() {
                if let Node::Split { feature, gain, .. } = node {
                    totals[*feature] += gain;
                }
            }
        }
        let sum: f64 = totals.iter().sum();
        if sum > 0.0 {
            totals.iter_mut().for_each(|t| *t /= sum);
        }
        self.feature_names.iter().cloned().zip(totals).collect()
    }
}

/// Probabilities for each row, in input order.
pub fn predict_proba<R: AsRef<[f64]>>(model: &GbdtModel, rows: &[R]) -> Result<Vec<f64>, GbdtError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            model.predict_row(row.as_ref()).map_err(|e| match e {
                GbdtError::WidthMismatch { expected, got, .. } => {
                    GbdtError::WidthMismatch { expected, got, row: i }
                }
                other => other,
            })
        })
        .collect()
}

/// Normalized gain importance by feature, in feature order.
pub fn feature_importance(model: &GbdtModel) -> Vec<(String, f64)> {
    model.feature_importance()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Tree {
        Tree::from_nodes(vec![
            Node::Split {
                feature,
                threshold,
                left: 1,
                right: 2,
                gain: 1.0,
                cover: 1.0,
            },
            Node::Leaf {
                weight: left,
                cover: 0.5,
            },
            Node::Leaf {
                weight: right,
                cover: 0.5,
            },
        ])
    }

    fn model(trees: Vec<Tree>, n_features: usize) -> GbdtModel {
        GbdtModel {
            format_version: FORMAT_VERSION,
            feature_names: (0..n_features).map(|i| format!("f{i}")).collect(),
            base_score_logit: 0.0,
            params: GbdtParams::default(),
            scale_pos_weight_used: 1.0,
            trees,
        }
    }

    #[test]
    fn empty_model_predicts_half() {
        let m = model(vec![], 2);
        assert_eq!(predict_proba(&m, &[vec![0.0, 1.0], vec![5.0, -3.0]]).unwrap(), vec![0.5, 0.5]);
        assert!(feature_importance(&m).iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn routing_is_strictly_less_than() {
        let t = stump(0, 1.5, -1.0, 1.0);
        assert_eq!(t.predict(&[1.4999]), -1.0);
        assert_eq!(t.predict(&[1.5]), 1.0);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn width_mismatch() {
        let m = model(vec![stump(0, 0.0, -1.0, 1.0)], 2);
        assert!(matches!(
            predict_proba(&m, &[vec![0.0, 0.0], vec![1.0]]),
            Err(GbdtError::WidthMismatch { expected: 2, got: 1, row: 1 })
        ));
    }

    #[test]
    fn saturated_margins_stay_inside_unit_interval() {
        let m = model(vec![stump(0, 0.0, -1e6, 1e6)], 1);
        let p = predict_proba(&m, &[[-1.0], [1.0]]).unwrap();
        assert!(p[0] > 0.0 && p[0] < 1.0);
        assert!(p[1] > 0.0 && p[1] < 1.0);
    }

    #[test]
    fn importance_single_feature() {
        let m = model(vec![stump(0, 0.0, -1.0, 1.0), stump(0, 2.0, -1.0, 1.0)], 3);
        let imp = feature_importance(&m);
        assert_eq!(imp[0], ("f0".to_string(), 1.0));
        assert_eq!(imp[1].1, 0.0);
        assert_eq!(imp[2].1, 0.0);
    }
}
