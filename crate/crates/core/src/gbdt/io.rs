//! Model files.
//!
//! A model is stored as pretty-printed JSON. Each tree is a flat node array
//! with the root at index 0; split nodes name their children by index and
//! leaves carry `-1` in `feature_index`, `left` and `right`. Floats are
//! written in shortest round-trip form, so a reloaded model predicts
//! bit-identically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{GbdtError, GbdtModel, GbdtParams, Node, Tree};

pub const FORMAT_VERSION: u64 = 1;

const LEAF: i64 = -1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    feature_index: i64,
    threshold: f64,
    left: i64,
    right: i64,
    leaf_weight: f64,
    gain: f64,
    cover: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    nodes: Vec<RawNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    format_version: u64,
    feature_names: Vec<String>,
    base_score_logit: f64,
    scale_pos_weight_used: f64,
    params: GbdtParams,
    trees: Vec<RawTree>,
}

fn to_raw(model: &GbdtModel) -> RawModel {
    let trees = model
        .trees
        .iter()
        .map(|t| RawTree {
            nodes: t
                .nodes()
                .iter()
                .map(|n| match *n {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        gain,
                        cover,
                    } => RawNode {
                        feature_index: feature as i64,
                        threshold,
                        left: left as i64,
                        right: right as i64,
                        leaf_weight: 0.0,
                        gain,
                        cover,
                    },
                    Node::Leaf { weight, cover } => RawNode {
                        feature_index: LEAF,
                        threshold: 0.0,
                        left: LEAF,
                        right: LEAF,
                        leaf_weight: weight,
                        gain: 0.0,
                        cover,
                    },
                })
                .collect(),
        })
        .collect();
    RawModel {
        format_version: model.format_version,
        feature_names: model.feature_names.clone(),
        base_score_logit: model.base_score_logit,
        scale_pos_weight_used: model.scale_pos_weight_used,
        params: model.params.clone(),
        trees,
    }
}

fn malformed(msg: impl Into<String>) -> GbdtError {
    GbdtError::MalformedModel(msg.into())
}

fn tree_from_raw(raw: RawTree, t: usize, n_features: usize, max_depth: usize) -> Result<Tree, GbdtError> {
    let len = raw.nodes.len();
    if len == 0 {
        return Err(malformed(format!("tree {t} has no nodes")));
    }
    let mut referenced = vec![false; len];
    let mut nodes = Vec::with_capacity(len);
    for (i, n) in raw.nodes.into_iter().enumerate() {
        let ctx = |what: &str| malformed(format!("tree {t} node {i}: {what}"));
        if !(n.threshold.is_finite() && n.leaf_weight.is_finite() && n.gain.is_finite() && n.cover.is_finite()) {
            return Err(ctx("non-finite value"));
        }
        if n.feature_index == LEAF {
            if n.left != LEAF || n.right != LEAF {
                return Err(ctx("leaf with children"));
            }
            nodes.push(Node::Leaf {
                weight: n.leaf_weight,
                cover: n.cover,
            });
            continue;
        }
        if n.feature_index < 0 || n.feature_index as usize >= n_features {
            return Err(ctx(&format!(
                "feature_index {} out of range for {n_features} features",
                n.feature_index
            )));
        }
        let mut child = |c: i64| -> Result<usize, GbdtError> {
            // children always follow their parent, which rules out cycles
            if c <= i as i64 || c as usize >= len {
                return Err(ctx(&format!("child index {c} out of range")));
            }
            let c = c as usize;
            if std::mem::replace(&mut referenced[c], true) {
                return Err(ctx(&format!("node {c} has two parents")));
            }
            Ok(c)
        };
        let left = child(n.left)?;
        let right = child(n.right)?;
        nodes.push(Node::Split {
            feature: n.feature_index as usize,
            threshold: n.threshold,
            left,
            right,
            gain: n.gain,
            cover: n.cover,
        });
    }
    if let Some(orphan) = referenced.iter().skip(1).position(|r| !r) {
        return Err(malformed(format!("tree {t} node {} is unreachable", orphan + 1)));
    }
    let tree = Tree::from_nodes(nodes);
    if tree.depth() > max_depth {
        return Err(malformed(format!(
            "tree {t} has depth {} > max_depth {max_depth}",
            tree.depth()
        )));
    }
    Ok(tree)
}

fn from_raw(raw: RawModel) -> Result<GbdtModel, GbdtError> {
    if raw.format_version != FORMAT_VERSION {
        return Err(GbdtError::VersionMismatch {
            found: raw.format_version,
            supported: FORMAT_VERSION,
        });
    }
    raw.params
        .validate()
        .map_err(|e| malformed(format!("params: {e}")))?;
    if !raw.base_score_logit.is_finite() {
        return Err(malformed("non-finite base_score_logit"));
    }
    let n_features = raw.feature_names.len();
    let max_depth = raw.params.max_depth;
    let trees = raw
        .trees
        .into_iter()
        .enumerate()
        .map(|(t, tree)| tree_from_raw(tree, t, n_features, max_depth))
        .collect::<Result<_, _>>()?;
    Ok(GbdtModel {
        format_version: raw.format_version,
        feature_names: raw.feature_names,
        base_score_logit: raw.base_score_logit,
        params: raw.params,
        scale_pos_weight_used: raw.scale_pos_weight_used,
        trees,
    })
}

impl GbdtModel {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&to_raw(self)).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, GbdtError> {
        let value: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        match value.get("format_version").and_then(Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            Some(found) => {
                return Err(GbdtError::VersionMismatch {
                    found,
                    supported: FORMAT_VERSION,
                })
            }
            None => return Err(malformed("missing format_version")),
        }
        let raw: RawModel = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
        from_raw(raw)
    }
}

pub fn save(model: &GbdtModel, path: impl AsRef<Path>) -> Result<(), GbdtError> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<GbdtModel, GbdtError> {
    GbdtModel::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::{predict_proba, train};

    fn small_model() -> GbdtModel {
        let rows: Vec<[f64; 2]> = (0..60)
            .map(|i| [i as f64 / 7.0, ((i * 13) % 17) as f64 / 3.0])
            .collect();
        let labels: Vec<u8> = (0..60).map(|i| u8::from(i % 3 == 0 || i > 40)).collect();
        let params = GbdtParams {
            n_estimators: 8,
            min_child_weight: 0.5,
            gamma: 0.0,
            ..GbdtParams::default()
        };
        train(&rows, &labels, &["a".into(), "b".into()], &params).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let model = small_model();
        let back = GbdtModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        let grid: Vec<[f64; 2]> = (0..100).map(|i| [i as f64 / 10.0, (i % 10) as f64]).collect();
        assert_eq!(
            predict_proba(&model, &grid).unwrap(),
            predict_proba(&back, &grid).unwrap()
        );
    }

    #[test]
    fn unknown_version() {
        let text = small_model().to_json().replacen("\"format_version\": 1", "\"format_version\": 7", 1);
        assert!(matches!(
            GbdtModel::from_json(&text),
            Err(GbdtError::VersionMismatch { found: 7, supported: 1 })
        ));
    }

    #[test]
    fn feature_index_out_of_range() {
        let mut raw = to_raw(&small_model());
        let split = raw.trees[0]
            .nodes
            .iter_mut()
            .find(|n| n.feature_index >= 0)
            .expect("model has a split");
        split.feature_index = 2;
        let text = serde_json::to_string(&raw).unwrap();
        assert!(matches!(GbdtModel::from_json(&text), Err(GbdtError::MalformedModel(_))));
    }

    #[test]
    fn cyclic_children_rejected() {
        let mut raw = to_raw(&small_model());
        let nodes = &mut raw.trees[0].nodes;
        assert!(nodes.len() >= 3);
        nodes[0].left = 0;
        let text = serde_json::to_string(&raw).unwrap();
        assert!(matches!(GbdtModel::from_json(&text), Err(GbdtError::MalformedModel(_))));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(GbdtModel::from_json("{"), Err(GbdtError::MalformedModel(_))));
        assert!(matches!(GbdtModel::from_json("{}"), Err(GbdtError::MalformedModel(_))));
    }
}
