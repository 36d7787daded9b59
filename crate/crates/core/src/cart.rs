//! CART classification trees grown on Gini impurity.
//!
//! Split search walks the candidate features in the order they were drawn,
//! sorts the node's rows by each feature and scores every boundary between
//! adjacent distinct values. A split is only adopted when it lowers the
//! weighted child impurity strictly below the parent's (by more than
//! [`IMPURITY_TOLERANCE`]); among equal-impurity splits the [`TieBreak`]
//! policy decides. Samples route left iff `x[feature] <= threshold`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::prng::RngState;

/// Impurity comparisons treat values within this distance as equal.
pub const IMPURITY_TOLERANCE: f64 = 1e-12;

/// Per-class sample counts of a node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassCounts(pub Vec<usize>);

impl ClassCounts {
    pub fn zeros(n_classes: usize) -> Self {
        ClassCounts(vec![0; n_classes])
    }

    pub fn from_rows(ds: &Dataset, rows: &[usize]) -> Self {
        let mut counts = Self::zeros(ds.n_classes());
        for &r in rows {
            counts.0[ds.label(r)] += 1;
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn is_pure(&self) -> bool {
        self.0.iter().filter(|&&c| c > 0).count() <= 1
    }

    /// `counts / total`; all zeros for an empty node.
    pub fn distribution(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.0.len()];
        }
        self.0.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn gini(&self) -> f64 {
        gini(self)
    }
}

/// `1 - sum(p_i^2)`, summed in class order. Empty nodes have impurity 0.
pub fn gini(counts: &ClassCounts) -> f64 {
    let total = counts.total();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    1.0 - counts
        .0
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

/// `(nL * gini(L) + nR * gini(R)) / n`, evaluated left to right.
pub fn weighted_child_impurity(left: &ClassCounts, right: &ClassCounts) -> f64 {
    let nl = left.total() as f64;
    let nr = right.total() as f64;
    (nl * gini(left) + nr * gini(right)) / (nl + nr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSizeSemantics {
    /// Nodes smaller than the minimum are not split; children may be smaller.
    #[default]
    MinSplit,
    /// Splits leaving a child smaller than the minimum are rejected.
    MinLeaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Keep whichever tied split was encountered first in candidate draw order.
    FirstInDrawOrder,
    /// Keep the tied split with the smaller feature index, then threshold.
    #[default]
    LowestFeatureIndex,
}

/// Tree-growing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowConfig {
    pub mtry: usize,
    pub min_node_size: usize,
    pub node_size_semantics: NodeSizeSemantics,
    pub max_depth: Option<usize>,
    pub tie_break: TieBreak,
}

impl GrowConfig {
    /// All features, fully grown, deterministic ties.
    pub fn full(n_features: usize) -> Self {
        Self {
            mtry: n_features,
            min_node_size: 1,
            node_size_semantics: NodeSizeSemantics::MinSplit,
            max_depth: None,
            tie_break: TieBreak::LowestFeatureIndex,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.mtry == 0 || self.mtry > n_features {
            return Err(invalid(format!(
                "mtry must lie in [1, {n_features}], got {}",
                self.mtry
            )));
        }
        if self.min_node_size == 0 {
            return Err(invalid("min_node_size must be >= 1"));
        }
        if self.max_depth == Some(0) {
            return Err(invalid("max_depth must be >= 1 when set"));
        }
        Ok(())
    }

    fn min_leaf(&self) -> usize {
        match self.node_size_semantics {
            NodeSizeSemantics::MinLeaf => self.min_node_size,
            NodeSizeSemantics::MinSplit => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left_counts: ClassCounts,
    pub right_counts: ClassCounts,
    pub weighted_child_impurity: f64,
    pub impurity_decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalNode {
    pub feature: usize,
    pub threshold: f64,
    pub n_samples: usize,
    pub gini: f64,
    pub class_counts: ClassCounts,
    pub left: Box<TreeNode>,
    pub right: Box<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafNode {
    pub n_samples: usize,
    pub gini: f64,
    pub class_counts: ClassCounts,
    pub class_distribution: Vec<f64>,
}

impl LeafNode {
    pub fn from_counts(class_counts: ClassCounts) -> Self {
        Self {
            n_samples: class_counts.total(),
            gini: gini(&class_counts),
            class_distribution: class_counts.distribution(),
            class_counts,
        }
    }

    /// Majority class of the leaf; ties go to the lowest class id.
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.class_distribution)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal(InternalNode),
    Leaf(LeafNode),
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Internal(n) => n.n_samples,
            TreeNode::Leaf(l) => l.n_samples,
        }
    }

    pub fn gini(&self) -> f64 {
        match self {
            TreeNode::Internal(n) => n.gini,
            TreeNode::Leaf(l) => l.gini,
        }
    }

    pub fn class_counts(&self) -> &ClassCounts {
        match self {
            TreeNode::Internal(n) => &n.class_counts,
            TreeNode::Leaf(l) => &l.class_counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub n_classes: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    /// Pre-order (node, depth) traversal, left before right. The root has depth 0.
    pub fn nodes(&self) -> Vec<(&TreeNode, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![(&self.root, 0)];
        while let Some((node, depth)) = stack.pop() {
            out.push((node, depth));
            if let TreeNode::Internal(n) = node {
                stack.push((&n.right, depth + 1));
                stack.push((&n.left, depth + 1));
            }
        }
        out
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes().len()
    }

    pub fn depth(&self) -> usize {
        self.nodes().iter().map(|(_, d)| *d).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&LeafNode> {
        self.nodes()
            .into_iter()
            .filter_map(|(n, _)| match n {
                TreeNode::Leaf(l) => Some(l),
                TreeNode::Internal(_) => None,
            })
            .collect()
    }

    pub fn predict_leaf(&self, x: &[f64]) -> Result<&LeafNode> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(l) => return Ok(l),
                TreeNode::Internal(n) => {
                    node = if x[n.feature] <= n.threshold {
                        &n.left
                    } else {
                        &n.right
                    };
                }
            }
        }
    }
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Shuffles `[0, n_features)` and keeps the first `mtry` entries in draw order.
pub fn draw_candidates(rng: &mut RngState, n_features: usize, mtry: usize) -> Result<Vec<usize>> {
    if mtry == 0 || mtry > n_features {
        return Err(invalid(format!(
            "mtry must lie in [1, {n_features}], got {mtry}"
        )));
    }
    let mut order = rng.shuffle(n_features)?;
    order.truncate(mtry);
    Ok(order)
}

/// Midpoint of two adjacent distinct values `lo < hi`, kept strictly below
/// `hi` so that `hi` always routes right.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

fn replaces(best: &Split, feature: usize, threshold: f64, weighted: f64, tie: TieBreak) -> bool {
    if weighted < best.weighted_child_impurity - IMPURITY_TOLERANCE {
        return true;
    }
    match tie {
        TieBreak::FirstInDrawOrder => false,
        TieBreak::LowestFeatureIndex => {
            (weighted - best.weighted_child_impurity).abs() <= IMPURITY_TOLERANCE
                && (feature, threshold) < (best.feature, best.threshold)
        }
    }
}

/// Best admissible split of `rows` over `candidates`, or `None`.
pub fn best_split(
    ds: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    parent: &ClassCounts,
    cfg: &GrowConfig,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let parent_gini = gini(parent);
    let min_leaf = cfg.min_leaf();
    let mut best: Option<Split> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);

    for &feature in candidates {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (ds.value(r, feature), ds.label(r))));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = ClassCounts::zeros(parent.n_classes());
        let mut right = parent.clone();
        for i in 0..n - 1 {
            let label = sorted[i].1;
            left.0[label] += 1;
            right.0[label] -= 1;
            let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
            if lo == hi {
                continue;
            }
            let (nl, nr) = (i + 1, n - i - 1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let weighted = weighted_child_impurity(&left, &right);
            if weighted >= parent_gini - IMPURITY_TOLERANCE {
                continue;
            }
            let threshold = midpoint(lo, hi);
            let better = match &best {
                None => true,
                Some(b) => replaces(b, feature, threshold, weighted, cfg.tie_break),
            };
            if better {
                best = Some(Split {
                    feature,
                    threshold,
                    left_counts: left.clone(),
                    right_counts: right.clone(),
                    weighted_child_impurity: weighted,
                    impurity_decrease: parent_gini - weighted,
                });
            }
        }
    }
    best
}

/// Grows one tree on `rows` (duplicates allowed, as in a bootstrap sample).
///
/// Candidates are drawn from `rng` at every node that is eligible for a
/// split, in pre-order with the left subtree first.
pub fn grow_tree(
    ds: &Dataset,
    rows: &[usize],
    cfg: &GrowConfig,
    rng: &mut RngState,
) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(invalid("cannot grow a tree on zero rows"));
    }
    cfg.validate(ds.n_features())?;
    let root = grow_node(ds, rows.to_vec(), 0, cfg, rng)?;
    Ok(DecisionTree {
        n_features: ds.n_features(),
        n_classes: ds.n_classes(),
        root,
    })
}

fn grow_node(
    ds: &Dataset,
    rows: Vec<usize>,
    depth: usize,
    cfg: &GrowConfig,
    rng: &mut RngState,
) -> Result<TreeNode> {
    let counts = ClassCounts::from_rows(ds, &rows);
    let n = rows.len();
    let stop = counts.is_pure()
        || cfg.max_depth.is_some_and(|d| depth >= d)
        || (cfg.node_size_semantics == NodeSizeSemantics::MinSplit && n < cfg.min_node_size);
    if stop {
        return Ok(TreeNode::Leaf(LeafNode::from_counts(counts)));
    }
    let candidates = draw_candidates(rng, ds.n_features(), cfg.mtry)?;
    let Some(split) = best_split(ds, &rows, &candidates, &counts, cfg) else {
        return Ok(TreeNode::Leaf(LeafNode::from_counts(counts)));
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| ds.value(r, split.feature) <= split.threshold);
    debug_assert_eq!(left_rows.len(), split.left_counts.total());
    let left = grow_node(ds, left_rows, depth + 1, cfg, rng)?;
    let right = grow_node(ds, right_rows, depth + 1, cfg, rng)?;
    Ok(TreeNode::Internal(InternalNode {
        feature: split.feature,
        threshold: split.threshold,
        n_samples: n,
        gini: gini(&counts),
        class_counts: counts,
        left: Box::new(left),
        right: Box::new(right),
    }))
}

pub mod oracle {
    //! Brute-force split enumeration, used to check [`super::best_split`].

    use super::{midpoint, ClassCounts, Split, IMPURITY_TOLERANCE};
    use crate::dataset::Dataset;

    fn impurity(counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let sq: f64 = counts
            .iter()
            .map(|&c| (c as f64 / total as f64).powi(2))
            .sum();
        1.0 - sq
    }

    /// Every split over all features and all distinct-value boundaries that
    /// reaches the global minimum weighted child impurity, restricted to
    /// children of at least `min_leaf` rows. Empty when nothing strictly
    /// improves on the parent.
    pub fn exhaustive_split_oracle_min_leaf(
        ds: &Dataset,
        rows: &[usize],
        parent: &ClassCounts,
        min_leaf: usize,
    ) -> Vec<Split> {
        let n = rows.len();
        let parent_gini = impurity(&parent.0);
        let mut all = Vec::new();
        for feature in 0..ds.n_features() {
            let mut values: Vec<f64> = rows.iter().map(|&r| ds.value(r, feature)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let threshold = midpoint(w[0], w[1]);
                let mut left = vec![0; parent.0.len()];
                let mut right = vec![0; parent.0.len()];
                for &r in rows {
                    if ds.value(r, feature) <= threshold {
                        left[ds.label(r)] += 1;
                    } else {
                        right[ds.label(r)] += 1;
                    }
                }
                let nl: usize = left.iter().sum();
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let weighted =
                    (nl as f64 * impurity(&left) + nr as f64 * impurity(&right)) / n as f64;
                all.push(Split {
                    feature,
                    threshold,
                    left_counts: ClassCounts(left),
                    right_counts: ClassCounts(right),
                    weighted_child_impurity: weighted,
                    impurity_decrease: parent_gini - weighted,
                });
            }
        }
        let Some(min) = all
            .iter()
            .map(|s| s.weighted_child_impurity)
            .min_by(f64::total_cmp)
        else {
            return Vec::new();
        };
        if min >= parent_gini - IMPURITY_TOLERANCE {
            return Vec::new();
        }
        all.retain(|s| s.weighted_child_impurity - min <= IMPURITY_TOLERANCE);
        all
    }

    pub fn exhaustive_split_oracle(ds: &Dataset, rows: &[usize], parent: &ClassCounts) -> Vec<Split> {
        exhaustive_split_oracle_min_leaf(ds, rows, parent, 1)
    }
}
