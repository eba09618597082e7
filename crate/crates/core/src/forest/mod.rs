//! From-scratch random forest classifier: CART trees grown on bootstrap
//! samples with Gini impurity, per-split feature subsampling, probability
//! averaging and mean-decrease-impurity feature importance.
//!
//! Training is deterministic: each tree's random stream is a pure function
//! of `(seed, tree_index)`, so the fitted model is bit-identical regardless
//! of how many workers rayon schedules.

mod serialize;
mod tree;

pub use tree::{best_split, grow_tree, BestSplit, TreeNode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Number of trees in the ensemble.
    pub n_trees: usize,
    /// Maximum tree depth; `None` means unlimited.
    pub max_depth: Option<u32>,
    /// Minimum number of samples in each leaf.
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(n_features))`.
    pub mtry: Option<usize>,
    /// Draw a with-replacement sample of training size for each tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            max_depth: None,
            min_samples_leaf: 50,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_n_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_max_depth(mut self, max_depth: Option<u32>) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_min_samples_leaf(mut self, min_samples_leaf: usize) -> Self {
        self.min_samples_leaf = min_samples_leaf;
        self
    }

    pub fn with_mtry(mut self, mtry: Option<usize>) -> Self {
        self.mtry = mtry;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn resolved_mtry(&self, n_features: usize) -> usize {
        self.mtry.unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::validation("n_trees must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::validation("min_samples_leaf must be at least 1"));
        }
        let mtry = self.resolved_mtry(n_features);
        if mtry == 0 || mtry > n_features {
            return Err(Error::validation(format!(
                "mtry {mtry} outside 1..={n_features}"
            )));
        }
        Ok(())
    }
}

/// A trained ensemble plus its normalized feature importance.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    params: ForestParams,
    column_names: Vec<String>,
    importance: Vec<f64>,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }
}

/// Gini impurity of a node with the given class counts: `1 - p0^2 - p1^2`.
pub fn gini_impurity(n_class0: usize, n_class1: usize) -> Result<f64> {
    if n_class0 + n_class1 == 0 {
        return Err(Error::validation("gini impurity of an empty node"));
    }
    Ok(tree::gini(n_class0 as f64, n_class1 as f64))
}

/// Train a forest. Requires at least two rows and both classes present.
pub fn fit_forest(matrix: &FeatureMatrix, params: &ForestParams) -> Result<ForestModel> {
    let n_rows = matrix.n_rows();
    let n_features = matrix.n_cols();
    params.validate(n_features)?;
    if n_rows < 2 {
        return Err(Error::validation(format!("cannot fit on {n_rows} rows")));
    }
    let n_pos = matrix.target().iter().filter(|&&t| t == 1).count();
    if n_pos == 0 || n_pos == n_rows {
        return Err(Error::SingleClass(format!(
            "training target is constant {}",
            u8::from(n_pos > 0)
        )));
    }

    let mtry = params.resolved_mtry(n_features);
    let grown: Vec<(TreeNode, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = tree_rng(params.seed, tree_index as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n_rows).map(|_| rng.gen_range(0..n_rows)).collect()
            } else {
                (0..n_rows).collect()
            };
            let mut builder = tree::TreeBuilder::new(matrix, params, mtry);
            let root = builder.grow(rows, 0, &mut rng);
            (root, builder.into_importance())
        })
        .collect();

    let mut importance = vec![0.0; n_features];
    let mut trees = Vec::with_capacity(params.n_trees);
    for (root, tree_importance) in grown {
        for (total, contribution) in importance.iter_mut().zip(&tree_importance) {
            *total += contribution / params.n_trees as f64;
        }
        trees.push(root);
    }
    let sum: f64 = importance.iter().sum();
    if sum > 0.0 {
        for value in &mut importance {
            *value /= sum;
        }
    }

    Ok(ForestModel { trees, params: params.clone(), column_names: matrix.column_names().to_vec(), importance })
}

/// Per-tree random stream: a pure function of `(seed, tree_index)`.
fn tree_rng(seed: u64, tree_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index);
    rng
}

/// Mean over trees of the class-1 fraction at the leaf the row reaches.
pub fn predict_proba(model: &ForestModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), got: row.len() });
    }
    let sum: f64 = model.trees.iter().map(|t| t.leaf_fraction(row)).sum();
    Ok(sum / model.trees.len() as f64)
}

/// Scores for every row of a dataset (columns must match the model).
pub fn predict_matrix(model: &ForestModel, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    if matrix.column_names() != model.column_names() {
        return Err(Error::validation(format!(
            "dataset columns {:?} do not match model columns {:?}",
            matrix.column_names(),
            model.column_names()
        )));
    }
    (0..matrix.n_rows())
        .into_par_iter()
        .map(|r| predict_proba(model, &matrix.row(r)))
        .collect()
}

/// Mean-decrease-impurity importance, normalized to sum to 1 (all zeros for
/// a forest with no splits).
pub fn feature_importance(model: &ForestModel) -> &[f64] {
    &model.importance
}
