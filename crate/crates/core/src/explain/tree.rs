//! Regression trees grown by greedy variance reduction.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` uses all of them.
    pub features_per_split: Option<usize>,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_samples_leaf: 1,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Best split found on one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Drop in the sum of squared deviations from the node mean.
    pub gain: f64,
}

pub(crate) fn check_data(features: &[Vec<f64>], targets: &[f64]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if features.len() != targets.len() {
        return Err(Error::LengthMismatch { left: features.len(), right: targets.len() });
    }
    let m = features[0].len();
    if m == 0 {
        return Err(Error::invalid("rows have no features"));
    }
    if features.iter().any(|r| r.len() != m) {
        return Err(Error::invalid("rows have different lengths"));
    }
    if targets.iter().chain(features.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tree training data".into()));
    }
    Ok(m)
}

/// Best variance-reducing split of `rows` over `candidates` (ascending).
/// Ties go to the lowest feature index, then the lowest threshold.
pub fn best_split(
    features: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = rows.len();
    let leaf = min_samples_leaf.max(1);
    if n < 2 * leaf {
        return None;
    }
    let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / n as f64;
    let centered: Vec<f64> = rows.iter().map(|&r| targets[r] - mean).collect();
    let total_sq: f64 = centered.iter().map(|c| c * c).sum();
    let total: f64 = centered.iter().sum();

    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for &f in candidates {
        order.sort_by(|&a, &b| features[rows[a]][f].total_cmp(&features[rows[b]][f]));
        let mut sum_l = 0.0;
        let mut sq_l = 0.0;
        for k in 0..n - 1 {
            let c = centered[order[k]];
            sum_l += c;
            sq_l += c * c;
            let n_l = k + 1;
            let n_r = n - n_l;
            if n_l < leaf || n_r < leaf {
                continue;
            }
            let x_here = features[rows[order[k]]][f];
            let x_next = features[rows[order[k + 1]]][f];
            if x_here == x_next {
                continue;
            }
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let sse = (sq_l - sum_l * sum_l / n_l as f64) + (sq_r - sum_r * sum_r / n_r as f64);
            let gain = total_sq - sse;
            if gain > best.map_or(0.0, |b| b.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: 0.5 * (x_here + x_next),
                    gain,
                });
            }
        }
    }
    best
}

/// Grow a tree on `rows` of the data. With `features_per_split` set, each
/// split looks at a fresh random subset of features.
pub fn fit_cart_rows<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    targets: &[f64],
    rows: Vec<usize>,
    params: &CartParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    let m = check_data(features, targets)?;
    if rows.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    let per_split = params.features_per_split.unwrap_or(m).clamp(1, m);
    let mut nodes = Vec::new();
    // (rows, depth, slot to fill)
    let mut stack = vec![(rows, 0usize, 0usize)];
    nodes.push(Node::Leaf { value: 0.0 });
    while let Some((rows, depth, slot)) = stack.pop() {
        let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / rows.len() as f64;
        let split = if depth < params.max_depth {
            let candidates: Vec<usize> = if per_split == m {
                (0..m).collect()
            } else {
                let mut c = index::sample(rng, m, per_split).into_vec();
                c.sort_unstable();
                c
            };
            best_split(features, targets, &rows, &candidates, params.min_samples_leaf)
        } else {
            None
        };
        match split {
            None => nodes[slot] = Node::Leaf { value: mean },
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| features[i][s.feature] <= s.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                stack.push((r, depth + 1, right));
                stack.push((l, depth + 1, left));
            }
        }
    }
    Ok(RegressionTree {
        nodes,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    })
}

/// CART on every row, considering every feature at each split.
pub fn fit_cart<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    targets: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
    rng: &mut R,
) -> Result<RegressionTree> {
    let params = CartParams {
        max_depth,
        min_samples_leaf,
        features_per_split: None,
    };
    fit_cart_rows(features, targets, (0..targets.len()).collect(), &params, rng)
}
