//! Implementation-independent tree fingerprints and forest diffing.
//!
//! A canonical tree keeps, for every node in pre-order, its depth, sample
//! count, class counts and Gini impurity, plus for internal nodes the
//! impurity decrease and child sizes. Split features and thresholds are left
//! out, so two trees that differ only in which of several equivalent
//! features they cut on compare equal. Floats are compared after rounding
//! to 10 significant digits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cart::{weighted_child_impurity, DecisionTree, TreeNode};
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::forest::{Aggregation, Forest};

/// Rounds to 10 significant decimal digits, rendered in scientific notation.
pub fn round_sig10(x: f64) -> String {
    // -0.0 and 0.0 must agree
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.9e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitSignature {
    pub impurity_decrease: String,
    pub left_n: usize,
    pub right_n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalNode {
    pub depth: usize,
    pub n_samples: usize,
    pub class_counts: Vec<usize>,
    pub gini: String,
    /// Absent exactly for leaves.
    pub split_signature: Option<SplitSignature>,
}

/// Pre-order list of canonical nodes. For a binary tree the leaf/internal
/// flags in pre-order determine the shape, so list equality is structural
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalTree {
    pub nodes: Vec<CanonicalNode>,
}

pub fn canonicalize(tree: &DecisionTree) -> CanonicalTree {
    let nodes = tree
        .nodes()
        .into_iter()
        .map(|(node, depth)| {
            let split_signature = match node {
                TreeNode::Leaf(_) => None,
                TreeNode::Internal(n) => {
                    let weighted =
                        weighted_child_impurity(n.left.class_counts(), n.right.class_counts());
                    Some(SplitSignature {
                        impurity_decrease: round_sig10(n.gini - weighted),
                        left_n: n.left.n_samples(),
                        right_n: n.right.n_samples(),
                    })
                }
            };
            CanonicalNode {
                depth,
                n_samples: node.n_samples(),
                class_counts: node.class_counts().0.clone(),
                gini: round_sig10(node.gini()),
                split_signature,
            }
        })
        .collect();
    CanonicalTree { nodes }
}

pub fn trees_equal_canonical(a: &DecisionTree, b: &DecisionTree) -> bool {
    canonicalize(a) == canonicalize(b)
}

/// Same number of trees and tree `k` of each canonically equal.
pub fn forests_equal_canonical(a: &Forest, b: &Forest) -> bool {
    a.trees.len() == b.trees.len()
        && a.trees
            .iter()
            .zip(&b.trees)
            .all(|(x, y)| trees_equal_canonical(x, y))
}

/// Which aggregation each forest predicts with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationChoice {
    PerForest,
    Override(Aggregation),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDivergence {
    pub a: String,
    pub b: String,
    pub n_divergent: usize,
    pub divergent_rows: Vec<usize>,
}

/// Pairwise count of test rows on which forests predict different classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub labels: Vec<String>,
    pub n_test: usize,
    /// Symmetric, zero diagonal.
    pub matrix: Vec<Vec<usize>>,
    pub pairs: Vec<PairDivergence>,
}

impl DivergenceReport {
    pub fn total_divergent(&self) -> usize {
        self.pairs.iter().map(|p| p.n_divergent).sum()
    }

    /// Upper-triangular table: one row per forest but the last, one column
    /// per forest but the first.
    pub fn render_table(&self) -> String {
        let k = self.labels.len();
        let row_w = self.labels[..k - 1].iter().map(|l| l.len()).max().unwrap_or(0);
        let col_w: Vec<usize> = self.labels[1..]
            .iter()
            .map(|l| l.len().max(self.n_test.to_string().len()))
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:>row_w$} |", "");
        for (l, w) in self.labels[1..].iter().zip(&col_w) {
            let _ = write!(out, " {l:>w$}");
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{}-+{}",
            "-".repeat(row_w),
            "-".repeat(col_w.iter().map(|w| w + 1).sum())
        );
        for i in 0..k - 1 {
            let _ = write!(out, "{:>row_w$} |", self.labels[i]);
            for (j, w) in (1..k).zip(&col_w) {
                if j > i {
                    let _ = write!(out, " {:>w$}", self.matrix[i][j]);
                } else {
                    let _ = write!(out, " {:>w$}", "");
                }
            }
            out.push('\n');
        }
        let _ = writeln!(out, "(divergent classifications out of {} test rows)", self.n_test);
        out
    }
}

pub fn forest_divergence(
    forests: &[(String, &Forest)],
    test: &Dataset,
    mode: AggregationChoice,
) -> Result<DivergenceReport> {
    if forests.len() < 2 {
        return Err(invalid("divergence needs at least two forests"));
    }
    let mut predictions = Vec::with_capacity(forests.len());
    for (_, f) in forests {
        if f.n_features != test.n_features() {
            return Err(Error::DimensionMismatch {
                expected: f.n_features,
                got: test.n_features(),
            });
        }
        let agg = match mode {
            AggregationChoice::PerForest => f.config.aggregation,
            AggregationChoice::Override(a) => a,
        };
        predictions.push(f.predict_dataset(test, agg)?);
    }
    let k = forests.len();
    let mut matrix = vec![vec![0; k]; k];
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let divergent_rows: Vec<usize> = predictions[i]
                .iter()
                .zip(&predictions[j])
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(r, _)| r)
                .collect();
            matrix[i][j] = divergent_rows.len();
            matrix[j][i] = divergent_rows.len();
            pairs.push(PairDivergence {
                a: forests[i].0.clone(),
                b: forests[j].0.clone(),
                n_divergent: divergent_rows.len(),
                divergent_rows,
            });
        }
    }
    Ok(DivergenceReport {
        labels: forests.iter().map(|(l, _)| l.clone()).collect(),
        n_test: test.n_rows(),
        matrix,
        pairs,
    })
}
