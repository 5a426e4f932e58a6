use rayon::prelude::*;

use super::sampling::{round_rng, sample_size, sample_without_replacement};
use super::{sigmoid, GbdtError, GbdtModel, GbdtParams, Node, ScalePosWeight, Tree, FORMAT_VERSION};

/// Split search over a node fans out across features once
/// `rows * features` reaches this many cells.
const PARALLEL_CELLS: usize = 1 << 15;

/// `#negatives / #positives`.
pub fn resolve_scale_pos_weight(labels: &[u8]) -> Result<f64, GbdtError> {
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(GbdtError::DegenerateLabels {
            positives,
            negatives,
        });
    }
    Ok(negatives as f64 / positives as f64)
}

/// Column-major copy of the training matrix.
struct Columns {
    data: Vec<Vec<f64>>,
}

impl Columns {
    fn from_rows<R: AsRef<[f64]>>(rows: &[R], width: usize) -> Result<Self, GbdtError> {
        let mut data = vec![Vec::with_capacity(rows.len()); width];
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(GbdtError::WidthMismatch {
                    expected: width,
                    got: row.len(),
                    row: r,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(GbdtError::NonFiniteFeature { row: r, col: c });
                }
                data[c].push(v);
            }
        }
        Ok(Self { data })
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    columns: &'a Columns,
    grad: &'a [f64],
    hess: &'a [f64],
    features: &'a [usize],
    params: &'a GbdtParams,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.lambda_reg) * self.params.learning_rate
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda_reg)
    }

    /// Best split of `rows` on one feature. Scans thresholds in increasing
    /// order and replaces only on strictly larger gain.
    fn best_on_feature(&self, feature: usize, rows: &[usize], g_sum: f64, h_sum: f64) -> Option<Candidate> {
        let values = &self.columns.data[feature];
        let mut order = rows.to_vec();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let parent = self.score(g_sum, h_sum);
        let mcw = self.params.min_child_weight;
        let (mut gl, mut hl) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for pair in order.windows(2) {
            let (i, next) = (pair[0], pair[1]);
            gl += self.grad[i];
            hl += self.hess[i];
            let (lo, hi) = (values[i], values[next]);
            if lo == hi {
                continue;
            }
            let (gr, hr) = (g_sum - gl, h_sum - hl);
            if hl < mcw || hr < mcw {
                continue;
            }
            let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent) - self.params.gamma;
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let mid = lo + (hi - lo) / 2.0;
                // adjacent floats can round the midpoint down onto `lo`
                let threshold = if mid > lo { mid } else { hi };
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn best_split(&self, rows: &[usize], g_sum: f64, h_sum: f64) -> Option<Candidate> {
        let search = |&f: &usize| self.best_on_feature(f, rows, g_sum, h_sum);
        let per_feature: Vec<Option<Candidate>> = if rows.len() * self.features.len() >= PARALLEL_CELLS {
            self.features.par_iter().map(search).collect()
        } else {
            self.features.iter().map(search).collect()
        };
        // features are ascending, so keeping the first of equal gains picks
        // the lowest index
        per_feature.into_iter().flatten().fold(None, |best, c| match best {
            Some(b) if c.gain <= b.gain => Some(b),
            _ => Some(c),
        })
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let g_sum: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h_sum: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let at = self.nodes.len();
        let split = if depth < self.params.max_depth && rows.len() >= 2 {
            self.best_split(&rows, g_sum, h_sum)
        } else {
            None
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf {
                weight: self.leaf_weight(g_sum, h_sum),
                cover: h_sum,
            });
            return at;
        };
        // placeholder, patched once both children exist
        self.nodes.push(Node::Leaf {
            weight: 0.0,
            cover: h_sum,
        });
        let values = &self.columns.data[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| values[i] < split.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain: split.gain,
            cover: h_sum,
        };
        at
    }
}

/// Fits a boosted ensemble with logistic loss. Label 1 is the positive
/// (machine-generated) class.
pub fn train<R: AsRef<[f64]>>(
    rows: &[R],
    labels: &[u8],
    feature_names: &[String],
    params: &GbdtParams,
) -> Result<GbdtModel, GbdtError> {
    params.validate()?;
    if rows.len() != labels.len() {
        return Err(GbdtError::InvalidParams(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if rows.len() < 2 {
        return Err(GbdtError::TooFewRows(rows.len()));
    }
    if let Some((row, &value)) = labels.iter().enumerate().find(|(_, &y)| y > 1) {
        return Err(GbdtError::InvalidLabel { row, value });
    }
    let width = feature_names.len();
    let columns = Columns::from_rows(rows, width)?;
    let auto_weight = resolve_scale_pos_weight(labels)?;
    let pos_weight = match params.scale_pos_weight {
        ScalePosWeight::Auto => auto_weight,
        ScalePosWeight::Fixed(w) => w,
    };

    let n = rows.len();
    let base_score_logit = 0.0;
    let mut margins = vec![base_score_logit; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let n_rows = sample_size(params.subsample, n);
    let n_cols = sample_size(params.colsample_bytree, width);
    let mut trees = Vec::with_capacity(params.n_estimators);

    for round in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let y = f64::from(labels[i]);
            let w = if labels[i] == 1 { pos_weight } else { 1.0 };
            grad[i] = (p - y) * w;
            hess[i] = p * (1.0 - p) * w;
        }
        let mut rng = round_rng(params.random_state, round as u64);
        let sampled_rows = sample_without_replacement(&mut rng, n, n_rows);
        let sampled_cols = sample_without_replacement(&mut rng, width, n_cols);

        let mut grower = Grower {
            columns: &columns,
            grad: &grad,
            hess: &hess,
            features: &sampled_cols,
            params,
            nodes: Vec::new(),
        };
        grower.grow(sampled_rows, 0);
        let tree = Tree::from_nodes(grower.nodes);
        for (i, m) in margins.iter_mut().enumerate() {
            let row = rows[i].as_ref();
            *m += tree.predict(row);
        }
        trees.push(tree);
    }

    Ok(GbdtModel {
        format_version: FORMAT_VERSION,
        feature_names: feature_names.to_vec(),
        base_score_logit,
        params: params.clone(),
        scale_pos_weight_used: pos_weight,
        trees,
    })
}
