//! Bagging, forest training and the two classification aggregations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{argmax_lowest, grow_tree, DecisionTree, GrowConfig, NodeSizeSemantics, TieBreak};
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::prng::{derive_stream, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// One vote per tree (the leaf's majority class); plurality wins.
    MajorityVote,
    /// Average leaf class distributions, then take the argmax.
    #[default]
    MeanProbability,
}

/// Number of candidate features drawn at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mtry {
    /// Every feature is a candidate (still visited in random order).
    #[default]
    All,
    /// `max(1, floor(sqrt(p)))`.
    Sqrt,
    Count(usize),
}

impl Mtry {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            Mtry::All => n_features,
            Mtry::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            Mtry::Count(m) => m,
        }
    }
}

/// Unified forest parameters. `mtry` is checked against the data at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mtry: Mtry,
    pub min_node_size: usize,
    pub node_size_semantics: NodeSizeSemantics,
    pub max_depth: Option<usize>,
    pub tie_break: TieBreak,
    pub bootstrap: bool,
    pub sample_fraction: f64,
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            mtry: Mtry::All,
            min_node_size: 1,
            node_size_semantics: NodeSizeSemantics::MinSplit,
            max_depth: None,
            tie_break: TieBreak::LowestFeatureIndex,
            bootstrap: true,
            sample_fraction: 1.0,
            aggregation: Aggregation::MeanProbability,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(invalid("n_trees must be >= 1"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(invalid(format!(
                "sample_fraction must lie in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        if self.min_node_size == 0 {
            return Err(invalid("min_node_size must be >= 1"));
        }
        if self.mtry == Mtry::Count(0) {
            return Err(invalid("mtry must be >= 1"));
        }
        if self.max_depth == Some(0) {
            return Err(invalid("max_depth must be >= 1 when set"));
        }
        Ok(())
    }

    pub fn resolved_mtry(&self, n_features: usize) -> usize {
        self.mtry.resolve(n_features)
    }

    pub fn grow_config(&self, n_features: usize) -> GrowConfig {
        GrowConfig {
            mtry: self.resolved_mtry(n_features),
            min_node_size: self.min_node_size,
            node_size_semantics: self.node_size_semantics,
            max_depth: self.max_depth,
            tie_break: self.tie_break,
        }
    }

    /// No bagging at all: every tree sees exactly the training rows.
    pub fn uses_full_sample(&self) -> bool {
        !self.bootstrap && self.sample_fraction == 1.0
    }
}

/// Row indices drawn for one tree (with multiplicity when bootstrapping).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapSample {
    pub indices: Vec<usize>,
}

/// Draws `round(fraction * n)` positions in `[0, n)`.
///
/// With replacement the draws are independent and kept in draw order;
/// without, they are the head of a shuffle.
pub fn bootstrap_sample(
    rng: &mut RngState,
    n: usize,
    replace: bool,
    fraction: f64,
) -> Result<BootstrapSample> {
    if n == 0 {
        return Err(invalid("bootstrap needs n >= 1"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("sample fraction must lie in (0, 1], got {fraction}")));
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 {
        return Err(invalid(format!(
            "sample fraction {fraction} draws zero rows out of {n}"
        )));
    }
    let indices = if replace {
        (0..k)
            .map(|_| rng.bounded_usize(n))
            .collect::<Result<Vec<_>>>()?
    } else {
        let mut perm = rng.shuffle(n)?;
        perm.truncate(k);
        perm
    };
    Ok(BootstrapSample { indices })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: ForestConfig,
    pub n_features: usize,
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Trains on `train` rows of `ds` single-threaded.
    pub fn fit(ds: &Dataset, train: &[usize], cfg: &ForestConfig) -> Result<Forest> {
        Self::fit_with_workers(ds, train, cfg, 1)
    }

    /// Trains with `workers` threads. The output does not depend on `workers`:
    /// tree `k` always uses stream `(cfg.seed, k)`.
    pub fn fit_with_workers(
        ds: &Dataset,
        train: &[usize],
        cfg: &ForestConfig,
        workers: usize,
    ) -> Result<Forest> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(invalid("training set is empty"));
        }
        if let Some(&bad) = train.iter().find(|&&r| r >= ds.n_rows()) {
            return Err(invalid(format!("training row {bad} out of range")));
        }
        let grow = cfg.grow_config(ds.n_features());
        grow.validate(ds.n_features())?;

        let build = |k: usize| -> Result<DecisionTree> {
            let mut rng = derive_stream(cfg.seed, k as u64);
            if cfg.uses_full_sample() {
                return grow_tree(ds, train, &grow, &mut rng);
            }
            let sample = bootstrap_sample(&mut rng, train.len(), cfg.bootstrap, cfg.sample_fraction)?;
            let rows: Vec<usize> = sample.indices.iter().map(|&i| train[i]).collect();
            grow_tree(ds, &rows, &grow, &mut rng)
        };

        let trees = if workers <= 1 {
            (0..cfg.n_trees).map(build).collect::<Result<Vec<_>>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| invalid(format!("cannot start {workers} workers: {e}")))?;
            pool.install(|| {
                (0..cfg.n_trees)
                    .into_par_iter()
                    .map(build)
                    .collect::<Result<Vec<_>>>()
            })?
        };
        Ok(Forest {
            config: cfg.clone(),
            n_features: ds.n_features(),
            n_classes: ds.n_classes(),
            trees,
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Per-class vote totals, one vote per tree.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check_dim(x)?;
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_leaf(x)?.argmax()] += 1;
        }
        Ok(votes)
    }

    pub fn predict_majority(&self, x: &[f64]) -> Result<usize> {
        let votes = self.votes(x)?;
        let mut best = 0;
        for (class, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = class;
            }
        }
        Ok(best)
    }

    /// Mean of the leaf distributions, accumulated in tree order.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut sum = vec![0.0; self.n_classes];
        for tree in &self.trees {
            let leaf = tree.predict_leaf(x)?;
            for (s, p) in sum.iter_mut().zip(&leaf.class_distribution) {
                *s += p;
            }
        }
        let b = self.trees.len() as f64;
        Ok(sum.into_iter().map(|s| s / b).collect())
    }

    pub fn predict_argmax_proba(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.predict_proba(x)?))
    }

    pub fn predict_with(&self, x: &[f64], mode: Aggregation) -> Result<usize> {
        match mode {
            Aggregation::MajorityVote => self.predict_majority(x),
            Aggregation::MeanProbability => self.predict_argmax_proba(x),
        }
    }

    /// Prediction under the forest's configured aggregation.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.predict_with(x, self.config.aggregation)
    }

    pub fn predict_dataset(&self, ds: &Dataset, mode: Aggregation) -> Result<Vec<usize>> {
        ds.rows().map(|x| self.predict_with(x, mode)).collect()
    }

    pub fn accuracy(&self, ds: &Dataset) -> Result<f64> {
        let pred = self.predict_dataset(ds, self.config.aggregation)?;
        let hits = pred.iter().zip(ds.labels()).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / ds.n_rows() as f64)
    }
}
