//! Deterministic random forest classification.
//!
//! Every random choice (train/test shuffle, bootstrap sample, per-node
//! candidate feature order) is drawn from a SplitMix64 stream derived from an
//! explicit seed, so a given `(data, config, seed)` produces the same forest
//! bit for bit on any machine and with any number of worker threads.
//!
//! Around the engine sit the tools to compare forests: canonical tree forms
//! that ignore which of several equivalent features a split used, and
//! pairwise divergence counts over a test set.

pub mod canonical;
pub mod cart;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod io;
pub mod prng;

pub use canonical::{
    canonicalize, forest_divergence, trees_equal_canonical, AggregationChoice, CanonicalTree,
    DivergenceReport,
};
pub use cart::{
    best_split, draw_candidates, gini, grow_tree, ClassCounts, DecisionTree, GrowConfig,
    NodeSizeSemantics, Split, TieBreak, TreeNode,
};
pub use dataset::{generate_synthetic_formulas, train_test_split, Dataset, SplitIndices};
pub use error::{Error, Result};
pub use forest::{bootstrap_sample, Aggregation, BootstrapSample, Forest, ForestConfig, Mtry};
pub use prng::{derive_stream, RngState, StreamKey};
