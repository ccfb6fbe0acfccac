//! CART regression trees with greedy variance-reduction splits over a
//! random feature subset per node.
//!
//! Determinism rules: candidate features are evaluated in ascending index
//! order and thresholds in ascending order, with strict improvement
//! required to replace the incumbent, so impurity ties resolve to the
//! lowest feature index and then the lowest threshold.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::Matrix;

/// Number of candidate features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureCount {
    /// floor(sqrt(p)), at least 1.
    Sqrt,
    /// floor(p/3), at least 1.
    Third,
    All,
    Exact(usize),
}

impl FeatureCount {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            FeatureCount::Sqrt => (n_features as f64).sqrt().floor() as usize,
            FeatureCount::Third => n_features / 3,
            FeatureCount::All => n_features,
            FeatureCount::Exact(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    /// None means unlimited depth.
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    #[serde(default = "default_features_per_split")]
    pub features_per_split: FeatureCount,
}

fn default_n_trees() -> usize {
    100
}

fn default_min_samples_leaf() -> usize {
    1
}

fn default_features_per_split() -> FeatureCount {
    FeatureCount::Sqrt
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeatureCount::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
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

/// A trained tree; node 0 is the root, children index into `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    child_sse: f64,
}

/// Trains one tree on the rows listed in `rows` (duplicates allowed, as in
/// bootstrap samples). The RNG drives only the per-node feature subsets.
pub fn train_tree<R: Rng>(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    hp: &Hyperparams,
    rng: &mut R,
) -> RegressionTree {
    assert_eq!(x.n_rows(), y.len(), "X/y row mismatch");
    assert!(!rows.is_empty(), "tree needs at least one sample");
    let mut nodes = Vec::new();
    build_node(x, y, rows.to_vec(), hp, 0, rng, &mut nodes);
    RegressionTree { nodes }
}

fn build_node<R: Rng>(
    x: &Matrix,
    y: &[f64],
    rows: Vec<usize>,
    hp: &Hyperparams,
    depth: usize,
    rng: &mut R,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let mean = node_mean(y, &rows);
    let n = rows.len();
    let depth_exhausted = hp.max_depth.is_some_and(|d| depth >= d);
    let all_equal = rows.iter().all(|&r| y[r] == y[rows[0]]);
    if n < 2 || n < 2 * hp.min_samples_leaf || depth_exhausted || all_equal {
        nodes.push(TreeNode::Leaf { value: mean });
        return nodes.len() - 1;
    }

    let candidates = sample_features(x.n_cols(), hp.features_per_split, rng);
    let Some(split) = best_split(x, y, &rows, &candidates, hp.min_samples_leaf) else {
        nodes.push(TreeNode::Leaf { value: mean });
        return nodes.len() - 1;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| x.get(r, split.feature) <= split.threshold);
    // Reserve the slot so children are appended after their parent.
    let node_idx = nodes.len();
    nodes.push(TreeNode::Leaf { value: mean });
    let left = build_node(x, y, left_rows, hp, depth + 1, rng, nodes);
    let right = build_node(x, y, right_rows, hp, depth + 1, rng, nodes);
    nodes[node_idx] = TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    node_idx
}

fn node_mean(y: &[f64], rows: &[usize]) -> f64 {
    let values: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    crate::numeric::pairwise_mean(&values)
}

/// Draws a sorted subset of feature indices without replacement.
fn sample_features<R: Rng>(n_features: usize, count: FeatureCount, rng: &mut R) -> Vec<usize> {
    let k = count.resolve(n_features);
    if k >= n_features {
        return (0..n_features).collect();
    }
    let mut all: Vec<usize> = (0..n_features).collect();
    let (shuffled, _) = all.partial_shuffle(rng, k);
    let mut chosen: Vec<usize> = shuffled.to_vec();
    chosen.sort_unstable();
    chosen
}

/// Exhaustive scan over candidate features and midpoint thresholds,
/// minimizing the summed child SSE. Strictly-better comparisons keep the
/// first optimum in (feature, threshold) order.
fn best_split(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = rows.len();
    let mut best: Option<SplitChoice> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &feature in candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x.get(r, feature), y[r])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        // Prefix sums over the value-sorted targets.
        let mut sum_left = 0.0;
        let mut sumsq_left = 0.0;
        let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
        let total_sumsq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
        for i in 1..n {
            sum_left += pairs[i - 1].1;
            sumsq_left += pairs[i - 1].1 * pairs[i - 1].1;
            if pairs[i - 1].0 == pairs[i].0 {
                continue;
            }
            if i < min_samples_leaf || n - i < min_samples_leaf {
                continue;
            }
            let sum_right = total_sum - sum_left;
            let sumsq_right = total_sumsq - sumsq_left;
            let sse_left = sumsq_left - sum_left * sum_left / i as f64;
            let sse_right = sumsq_right - sum_right * sum_right / (n - i) as f64;
            let child_sse = sse_left + sse_right;
            if best.as_ref().is_none_or(|b| child_sse < b.child_sse) {
                best = Some(SplitChoice {
                    feature,
                    threshold: (pairs[i - 1].0 + pairs[i].0) / 2.0,
                    child_sse,
                });
            }
        }
    }
    best
}
