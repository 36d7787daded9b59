//! Repeated-trial runs: train the same configuration under several seeds and
//! check what should and should not change between them.

use crate::canonical::{forest_divergence, forests_equal_canonical, AggregationChoice, DivergenceReport};
use crate::cart::{DecisionTree, NodeSizeSemantics, TreeNode};
use crate::config::Expectation;
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::forest::{Forest, ForestConfig};

/// Trial `t` trains with seed `base_seed + t` (wrapping).
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationResult {
    pub expectation: Expectation,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct TrialOutcome {
    pub forests: Vec<Forest>,
    /// Trials whose forest is canonically equal to trial 0's (trial 0 counts).
    pub canonical_equal: usize,
    /// Trials whose trees are bit-identical to trial 0's.
    pub bit_equal: usize,
    /// Present when there are at least two trials.
    pub divergence: Option<DivergenceReport>,
    pub results: Vec<ExpectationResult>,
}

impl TrialOutcome {
    pub fn all_hold(&self) -> bool {
        self.results.iter().all(|r| r.holds)
    }

    pub fn verdict(&self) -> String {
        let n = self.forests.len();
        let mut out = format!(
            "canonical-equal: {}/{n}, bit-equal: {}/{n}\n",
            self.canonical_equal, self.bit_equal
        );
        for r in &self.results {
            let tag = if r.holds { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {:?}: {}\n", r.expectation, r.detail));
        }
        out
    }
}

pub fn run_trials(
    ds: &Dataset,
    train: &[usize],
    test: &Dataset,
    base: &ForestConfig,
    trials: usize,
    workers: usize,
    expectations: &[Expectation],
) -> Result<TrialOutcome> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    let forests = (0..trials)
        .map(|t| {
            let cfg = ForestConfig {
                seed: trial_seed(base.seed, t),
                ..base.clone()
            };
            Forest::fit_with_workers(ds, train, &cfg, workers)
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = &forests[0];
    let canonical_equal = forests
        .iter()
        .filter(|f| forests_equal_canonical(reference, f))
        .count();
    let bit_equal = forests.iter().filter(|f| f.trees == reference.trees).count();

    let divergence = if trials >= 2 {
        let labelled: Vec<(String, &Forest)> = forests
            .iter()
            .enumerate()
            .map(|(t, f)| (format!("trial-{t}"), f))
            .collect();
        Some(forest_divergence(&labelled, test, AggregationChoice::PerForest)?)
    } else {
        None
    };

    let results = expectations
        .iter()
        .map(|&e| check(e, &forests, canonical_equal, bit_equal))
        .collect();
    Ok(TrialOutcome {
        forests,
        canonical_equal,
        bit_equal,
        divergence,
        results,
    })
}

fn check(e: Expectation, forests: &[Forest], canonical: usize, bit: usize) -> ExpectationResult {
    let n = forests.len();
    let (holds, detail) = match e {
        Expectation::CanonicalEqualAcrossTrials => {
            (canonical == n, format!("{canonical}/{n} trials canonically equal to trial 0"))
        }
        Expectation::BitEqualAcrossTrials => {
            (bit == n, format!("{bit}/{n} trials bit-identical to trial 0"))
        }
        Expectation::NodeSizeRespected => {
            let bad = forests
                .iter()
                .flat_map(|f| &f.trees)
                .filter(|t| !node_size_respected(t, &forests[0].config))
                .count();
            (bad == 0, format!("{bad} trees violate the node-size rule"))
        }
        Expectation::SomeLeafBelowMinimum => {
            let min = forests[0].config.min_node_size;
            let found = forests
                .iter()
                .flat_map(|f| &f.trees)
                .all(|t| small_leaf_under_large_parent(t, min).is_some());
            (found, format!("every tree has a leaf < {min} whose parent has >= {min} samples"))
        }
    };
    ExpectationResult {
        expectation: e,
        holds,
        detail,
    }
}

/// Min-split: every internal node has >= `min_node_size` samples.
/// Min-leaf: every child of a split has >= `min_node_size` samples.
pub fn node_size_respected(tree: &DecisionTree, cfg: &ForestConfig) -> bool {
    let min = cfg.min_node_size;
    tree.nodes().into_iter().all(|(node, _)| match node {
        TreeNode::Leaf(_) => true,
        TreeNode::Internal(n) => match cfg.node_size_semantics {
            NodeSizeSemantics::MinSplit => n.n_samples >= min,
            NodeSizeSemantics::MinLeaf => n.left.n_samples() >= min && n.right.n_samples() >= min,
        },
    })
}

/// `(parent_n, leaf_n)` of the first leaf in pre-order with fewer than `min`
/// samples under a parent with at least `min`.
pub fn small_leaf_under_large_parent(tree: &DecisionTree, min: usize) -> Option<(usize, usize)> {
    tree.nodes().into_iter().find_map(|(node, _)| match node {
        TreeNode::Internal(n) if n.n_samples >= min => [&n.left, &n.right]
            .into_iter()
            .find(|c| c.is_leaf() && c.n_samples() < min)
            .map(|c| (n.n_samples, c.n_samples())),
        _ => None,
    })
}
