//! Versioned JSON model serialization. Trees are stored as flat node arrays
//! in preorder; `f64` values round-trip exactly through serde_json.

use serde::{Deserialize, Serialize};

use super::{ForestModel, ForestParams, TreeNode};
use crate::error::{Error, Result};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    params: ForestParams,
    column_names: Vec<String>,
    importance: Vec<f64>,
    trees: Vec<Vec<FlatNode>>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FlatNode {
    Leaf { fraction: f64, n: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

fn flatten(node: &TreeNode, out: &mut Vec<FlatNode>) -> usize {
    match node {
        TreeNode::Leaf { class1_fraction, n_samples } => {
            out.push(FlatNode::Leaf { fraction: *class1_fraction, n: *n_samples });
            out.len() - 1
        }
        TreeNode::Split { feature, threshold, left, right } => {
            let slot = out.len();
            out.push(FlatNode::Split { feature: *feature, threshold: *threshold, left: 0, right: 0 });
            let left_idx = flatten(left, out);
            let right_idx = flatten(right, out);
            out[slot] = FlatNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: left_idx,
                right: right_idx,
            };
            slot
        }
    }
}

fn unflatten(nodes: &[FlatNode], index: usize, visited: &mut [bool], n_features: usize) -> Result<TreeNode> {
    let bad = |msg: String| Error::validation(format!("model file: {msg}"));
    let node = nodes.get(index).ok_or_else(|| bad(format!("node index {index} out of range")))?;
    if std::mem::replace(&mut visited[index], true) {
        return Err(bad(format!("node {index} referenced twice")));
    }
    match node {
        FlatNode::Leaf { fraction, n } => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(bad(format!("leaf fraction {fraction} outside [0,1]")));
            }
            Ok(TreeNode::Leaf { class1_fraction: *fraction, n_samples: *n })
        }
        FlatNode::Split { feature, threshold, left, right } => {
            if *feature >= n_features {
                return Err(bad(format!("split feature {feature} out of range")));
            }
            Ok(TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(unflatten(nodes, *left, visited, n_features)?),
                right: Box::new(unflatten(nodes, *right, visited, n_features)?),
            })
        }
    }
}

impl ForestModel {
    /// Serialize the model to its versioned JSON format.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            params: self.params.clone(),
            column_names: self.column_names.clone(),
            importance: self.importance.clone(),
            trees: self
                .trees
                .iter()
                .map(|root| {
                    let mut nodes = Vec::new();
                    flatten(root, &mut nodes);
                    nodes
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model is serializable")
    }

    /// Parse a model from JSON, validating version and structure.
    pub fn from_json(text: &str) -> Result<ForestModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let n_features = file.column_names.len();
        if file.importance.len() != n_features {
            return Err(Error::validation("model file: importance length mismatch"));
        }
        if file.trees.is_empty() {
            return Err(Error::validation("model file: no trees"));
        }
        let trees: Vec<TreeNode> = file
            .trees
            .iter()
            .map(|nodes| {
                if nodes.is_empty() {
                    return Err(Error::validation("model file: empty tree"));
                }
                let mut visited = vec![false; nodes.len()];
                let root = unflatten(nodes, 0, &mut visited, n_features)?;
                if !visited.iter().all(|&v| v) {
                    return Err(Error::validation("model file: unreachable nodes"));
                }
                Ok(root)
            })
            .collect::<Result<_>>()?;
        Ok(ForestModel {
            trees,
            params: file.params,
            column_names: file.column_names,
            importance: file.importance,
        })
    }
}
