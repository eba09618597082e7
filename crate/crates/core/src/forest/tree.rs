//! CART tree growth: exhaustive midpoint split search under Gini impurity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ForestParams;
use crate::features::FeatureMatrix;

/// One node of a fitted tree. Internal nodes route `value <= threshold` to
/// the left child and `value > threshold` to the right.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Fraction of class-1 training samples that reached this leaf.
        class1_fraction: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Class-1 fraction of the leaf this row is routed to.
    pub fn leaf_fraction(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class1_fraction, .. } => return *class1_fraction,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }

    /// Smallest leaf sample count in the tree.
    pub fn min_leaf_samples(&self) -> usize {
        match self {
            TreeNode::Leaf { n_samples, .. } => *n_samples,
            TreeNode::Split { left, right, .. } => left.min_leaf_samples().min(right.min_leaf_samples()),
        }
    }
}

pub(super) fn gini(n0: f64, n1: f64) -> f64 {
    let n = n0 + n1;
    let p0 = n0 / n;
    let p1 = n1 / n;
    1.0 - p0 * p0 - p1 * p1
}

/// The winning split of one node search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity decrease within the node.
    pub decrease: f64,
}

/// Exhaustive scan over the candidate features: thresholds at midpoints
/// between consecutive distinct sorted values, maximizing weighted impurity
/// decrease. Ties break toward the lower feature index, then the lower
/// threshold. Returns `None` when no split has positive decrease or every
/// split would leave a child below `min_samples_leaf`.
pub fn best_split(
    matrix: &FeatureMatrix,
    rows: &[usize],
    candidate_features: &[usize],
    min_samples_leaf: usize,
) -> Option<BestSplit> {
    let n = rows.len();
    if n < 2 * min_samples_leaf {
        return None;
    }
    let target = matrix.target();
    let total_ones = rows.iter().filter(|&&r| target[r] == 1).count();
    if total_ones == 0 || total_ones == n {
        return None;
    }
    let n_f = n as f64;
    let parent = gini((n - total_ones) as f64, total_ones as f64);

    let mut sorted_candidates = candidate_features.to_vec();
    sorted_candidates.sort_unstable();
    sorted_candidates.dedup();

    let mut best: Option<BestSplit> = None;
    let mut scratch: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &feature in &sorted_candidates {
        let column = matrix.column(feature);
        scratch.clear();
        scratch.extend(rows.iter().map(|&r| (column[r], target[r])));
        scratch.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        let mut ones_left = 0usize;
        for i in 1..n {
            ones_left += usize::from(scratch[i - 1].1);
            if scratch[i].0 <= scratch[i - 1].0 {
                continue;
            }
            let (n_left, n_right) = (i, n - i);
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let left = gini((n_left - ones_left) as f64, ones_left as f64);
            let right = gini(
                (n_right - (total_ones - ones_left)) as f64,
                (total_ones - ones_left) as f64,
            );
            let decrease = parent - (n_left as f64 / n_f) * left - (n_right as f64 / n_f) * right;
            if best.is_none_or(|b| decrease > b.decrease) {
                let threshold = (scratch[i - 1].0 + scratch[i].0) / 2.0;
                best = Some(BestSplit { feature, threshold, decrease });
            }
        }
    }
    best.filter(|b| b.decrease > 0.0)
}

/// Recursive tree construction; accumulates the per-feature impurity
/// decrease that [`super::fit_forest`] turns into importances.
pub(super) struct TreeBuilder<'a> {
    matrix: &'a FeatureMatrix,
    max_depth: Option<u32>,
    min_samples_leaf: usize,
    mtry: usize,
    n_root: f64,
    importance: Vec<f64>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(matrix: &'a FeatureMatrix, params: &ForestParams, mtry: usize) -> Self {
        TreeBuilder {
            matrix,
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            mtry,
            n_root: 0.0,
            importance: vec![0.0; matrix.n_cols()],
        }
    }

    pub fn into_importance(self) -> Vec<f64> {
        self.importance
    }

    pub fn grow(&mut self, rows: Vec<usize>, depth: u32, rng: &mut ChaCha8Rng) -> TreeNode {
        if depth == 0 {
            self.n_root = rows.len() as f64;
        }
        let n = rows.len();
        let ones = rows.iter().filter(|&&r| self.matrix.target()[r] == 1).count();
        let as_leaf = TreeNode::Leaf { class1_fraction: ones as f64 / n as f64, n_samples: n };
        if ones == 0 || ones == n {
            return as_leaf;
        }
        if self.max_depth.is_some_and(|limit| depth >= limit) {
            return as_leaf;
        }
        if n < 2 * self.min_samples_leaf {
            return as_leaf;
        }
        let candidates = sample_features(rng, self.matrix.n_cols(), self.mtry);
        let Some(split) = best_split(self.matrix, &rows, &candidates, self.min_samples_leaf) else {
            return as_leaf;
        };
        self.importance[split.feature] += (n as f64 / self.n_root) * split.decrease;

        let column = self.matrix.column(split.feature);
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for r in rows {
            if column[r] <= split.threshold {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// `mtry` distinct feature indices drawn from the node's random stream.
fn sample_features(rng: &mut ChaCha8Rng, n_features: usize, mtry: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n_features).collect();
    for i in 0..mtry.min(n_features) {
        let j = rng.gen_range(i..n_features);
        indices.swap(i, j);
    }
    indices.truncate(mtry);
    indices
}

/// Grow a single CART tree over the given sample, consuming the random
/// stream for per-node feature subsampling.
pub fn grow_tree(
    matrix: &FeatureMatrix,
    row_indices: &[usize],
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let mtry = params.resolved_mtry(matrix.n_cols());
    let mut builder = TreeBuilder::new(matrix, params, mtry);
    builder.grow(row_indices.to_vec(), 0, rng)
}
