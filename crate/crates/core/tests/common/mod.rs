#![allow(dead_code)]

use detforest::cart::InternalNode;
use detforest::{Dataset, DecisionTree, TreeNode};

/// 24 rows; columns 0 and 1 are exact copies, column 2 is pseudo-random noise.
pub fn duplicated_feature_dataset() -> Dataset {
    let n = 24;
    let mut features = Vec::with_capacity(n * 3);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64;
        let noise = ((i * 7 + 3) % 24) as f64 / 4.0;
        features.extend_from_slice(&[x, x, noise]);
        labels.push(usize::from((6..14).contains(&i) || i >= 20));
    }
    Dataset::new(features, labels, vec!["a".into(), "a_copy".into(), "noise".into()]).unwrap()
}

/// Builds a `Dataset` from column slices.
pub fn from_columns(cols: &[Vec<f64>], labels: &[usize]) -> Dataset {
    let n = labels.len();
    let mut features = Vec::with_capacity(n * cols.len());
    for i in 0..n {
        for c in cols {
            features.push(c[i]);
        }
    }
    let names = (0..cols.len()).map(|i| format!("f{i}")).collect();
    Dataset::new(features, labels.to_vec(), names).unwrap()
}

pub fn internal_nodes(tree: &DecisionTree) -> Vec<&InternalNode> {
    tree.nodes()
        .into_iter()
        .filter_map(|(n, _)| match n {
            TreeNode::Internal(i) => Some(i),
            TreeNode::Leaf(_) => None,
        })
        .collect()
}
