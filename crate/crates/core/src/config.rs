//! Flat `key = value` configuration files, presets and the reproducibility
//! audit.

use std::collections::BTreeMap;

use crate::cart::{NodeSizeSemantics, TieBreak};
use crate::error::{Error, Result};
use crate::forest::{Aggregation, ForestConfig, Mtry};

pub const KEYS: [&str; 10] = [
    "n_trees",
    "mtry",
    "min_node_size",
    "node_size_semantics",
    "max_depth",
    "tie_break",
    "bootstrap",
    "sample_fraction",
    "aggregation",
    "seed",
];

/// How each key is spelled by other random forest packages.
const PACKAGE_NAMES: [(&str, &str); 10] = [
    ("n_trees", "scikit-learn n_estimators | skranger n_estimators | ranger num.trees | randomForest ntree"),
    ("mtry", "scikit-learn max_features | skranger mtry | ranger mtry | randomForest mtry"),
    ("min_node_size", "scikit-learn min_samples_split (min-split) or min_samples_leaf (min-leaf) | skranger min_node_size | ranger min.node.size | randomForest nodesize (behaves as min-split)"),
    ("node_size_semantics", "selects which of the two min_node_size meanings applies"),
    ("max_depth", "scikit-learn max_depth | skranger max_depth | ranger max.depth | randomForest (none)"),
    ("tie_break", "no counterpart; other packages keep the first tied split in random draw order"),
    ("bootstrap", "scikit-learn bootstrap | skranger replace | ranger replace | randomForest replace"),
    ("sample_fraction", "scikit-learn max_samples | skranger sample_fraction | ranger sample.fraction | randomForest sampsize"),
    ("aggregation", "ranger/randomForest vote (majority-vote) | skranger/scikit-learn predict_proba argmax (mean-probability)"),
    ("seed", "scikit-learn random_state | skranger seed | ranger seed | randomForest set.seed()"),
];

/// Parsed config file; remembers which keys were given explicitly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if entries.insert(key.to_owned(), value.trim().to_owned()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Overlays the explicit entries on `base`.
    pub fn apply(&self, base: &ForestConfig) -> Result<ForestConfig> {
        let mut cfg = base.clone();
        for (key, value) in &self.entries {
            let bad = || Error::Config(format!("invalid value '{value}' for {key}"));
            match key.as_str() {
                "n_trees" => cfg.n_trees = value.parse().map_err(|_| bad())?,
                "mtry" => {
                    cfg.mtry = match value.as_str() {
                        "all" => Mtry::All,
                        "sqrt" => Mtry::Sqrt,
                        v => Mtry::Count(v.parse().map_err(|_| bad())?),
                    }
                }
                "min_node_size" => cfg.min_node_size = value.parse().map_err(|_| bad())?,
                "node_size_semantics" => {
                    cfg.node_size_semantics = parse_semantics(value).ok_or_else(bad)?
                }
                "max_depth" => {
                    cfg.max_depth = match value.as_str() {
                        "none" => None,
                        v => Some(v.parse().map_err(|_| bad())?),
                    }
                }
                "tie_break" => cfg.tie_break = parse_tie_break(value).ok_or_else(bad)?,
                "bootstrap" => cfg.bootstrap = value.parse().map_err(|_| bad())?,
                "sample_fraction" => cfg.sample_fraction = value.parse().map_err(|_| bad())?,
                "aggregation" => cfg.aggregation = parse_aggregation(value).ok_or_else(bad)?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                _ => unreachable!("keys checked at parse time"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_semantics(s: &str) -> Option<NodeSizeSemantics> {
    match s {
        "min-split" => Some(NodeSizeSemantics::MinSplit),
        "min-leaf" => Some(NodeSizeSemantics::MinLeaf),
        _ => None,
    }
}

pub fn parse_tie_break(s: &str) -> Option<TieBreak> {
    match s {
        "first-in-draw" | "first-in-draw-order" => Some(TieBreak::FirstInDrawOrder),
        "lowest-feature-index" | "lowest-index" => Some(TieBreak::LowestFeatureIndex),
        _ => None,
    }
}

pub fn parse_aggregation(s: &str) -> Option<Aggregation> {
    match s {
        "majority-vote" | "vote" => Some(Aggregation::MajorityVote),
        "mean-probability" | "probability" => Some(Aggregation::MeanProbability),
        _ => None,
    }
}

pub fn semantics_name(s: NodeSizeSemantics) -> &'static str {
    match s {
        NodeSizeSemantics::MinSplit => "min-split",
        NodeSizeSemantics::MinLeaf => "min-leaf",
    }
}

pub fn tie_break_name(t: TieBreak) -> &'static str {
    match t {
        TieBreak::FirstInDrawOrder => "first-in-draw",
        TieBreak::LowestFeatureIndex => "lowest-feature-index",
    }
}

pub fn aggregation_name(a: Aggregation) -> &'static str {
    match a {
        Aggregation::MajorityVote => "majority-vote",
        Aggregation::MeanProbability => "mean-probability",
    }
}

/// Writes every key explicitly, preceded by the cross-package name mapping.
pub fn render_config(cfg: &ForestConfig) -> String {
    let mut out = String::from("# detforest forest configuration\n#\n");
    for (key, names) in PACKAGE_NAMES {
        out.push_str(&format!("# {key}: {names}\n"));
    }
    out.push('\n');
    let mtry = match cfg.mtry {
        Mtry::All => "all".to_owned(),
        Mtry::Sqrt => "sqrt".to_owned(),
        Mtry::Count(m) => m.to_string(),
    };
    let depth = cfg.max_depth.map_or("none".to_owned(), |d| d.to_string());
    let lines = [
        ("n_trees", cfg.n_trees.to_string()),
        ("mtry", mtry),
        ("min_node_size", cfg.min_node_size.to_string()),
        ("node_size_semantics", semantics_name(cfg.node_size_semantics).to_owned()),
        ("max_depth", depth),
        ("tie_break", tie_break_name(cfg.tie_break).to_owned()),
        ("bootstrap", cfg.bootstrap.to_string()),
        ("sample_fraction", cfg.sample_fraction.to_string()),
        ("aggregation", aggregation_name(cfg.aggregation).to_owned()),
        ("seed", cfg.seed.to_string()),
    ];
    for (k, v) in lines {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hazard {
    MinNodeSizeUnset,
    FirstInDrawTieBreak,
    BootstrapWithoutSeed,
    AggregationUnspecified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditWarning {
    pub hazard: Hazard,
    pub message: String,
}

/// Lists every reproducibility hazard in a config file. Advisory only.
pub fn audit(file: &ConfigFile) -> Result<Vec<AuditWarning>> {
    let cfg = file.apply(&ForestConfig::default())?;
    let mut out = Vec::new();
    if !file.has("min_node_size") {
        out.push(AuditWarning {
            hazard: Hazard::MinNodeSizeUnset,
            message: "min_node_size is not set: package defaults differ (10 in skranger, 1 in \
                      ranger, randomForest and scikit-learn), so trees diverge; set it to 1"
                .into(),
        });
    }
    if cfg.tie_break == TieBreak::FirstInDrawOrder {
        out.push(AuditWarning {
            hazard: Hazard::FirstInDrawTieBreak,
            message: "tie_break = first-in-draw: among splits with equal Gini impurity the \
                      chosen feature depends on the random candidate order, so split features \
                      change between runs"
                .into(),
        });
    }
    if cfg.bootstrap && !file.has("seed") {
        out.push(AuditWarning {
            hazard: Hazard::BootstrapWithoutSeed,
            message: "bootstrap is enabled but no seed is recorded: bootstrap samples cannot \
                      be reproduced"
                .into(),
        });
    }
    if !file.has("aggregation") {
        out.push(AuditWarning {
            hazard: Hazard::AggregationUnspecified,
            message: "aggregation is not specified: majority-vote and mean-probability can \
                      classify the same rows differently"
                .into(),
        });
    }
    Ok(out)
}

/// What a preset promises about its runs, checked by the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expectation {
    /// Every trial's forest is canonically equal to trial 0's.
    CanonicalEqualAcrossTrials,
    /// Every trial's trees are bit-identical to trial 0's.
    BitEqualAcrossTrials,
    /// Min-split: every internal node has at least `min_node_size` samples.
    /// Min-leaf: every leaf below a split has at least `min_node_size` samples.
    NodeSizeRespected,
    /// Some leaf holds fewer than `min_node_size` samples.
    SomeLeafBelowMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [Preset; 7] = [
    Preset { name: "default", description: "reproducible defaults" },
    Preset { name: "table2", description: "defaults with n_trees set (50 at desk scale)" },
    Preset { name: "default-5000-trees", description: "defaults with 5000 trees" },
    Preset { name: "table3", description: "one tree, all features, no bagging" },
    Preset { name: "randomness-eliminated", description: "alias of table3" },
    Preset { name: "fig1", description: "table3 with min-split 1000 and depth 5" },
    Preset { name: "fig2", description: "table3 with min-leaf 1000 and depth 5" },
];

/// Builds the config for preset `name`.
pub fn preset_config(name: &str) -> Result<ForestConfig> {
    let mut cfg = ForestConfig::default();
    let eliminate = |cfg: &mut ForestConfig| {
        cfg.n_trees = 1;
        cfg.mtry = Mtry::All;
        cfg.bootstrap = false;
        cfg.sample_fraction = 1.0;
    };
    match name {
        "default" => {}
        "table2" => cfg.n_trees = 50,
        "default-5000-trees" => cfg.n_trees = 5000,
        "table3" | "randomness-eliminated" => eliminate(&mut cfg),
        "fig1" | "fig2" => {
            eliminate(&mut cfg);
            cfg.min_node_size = 1000;
            cfg.max_depth = Some(5);
            cfg.node_size_semantics = if name == "fig1" {
                NodeSizeSemantics::MinSplit
            } else {
                NodeSizeSemantics::MinLeaf
            };
        }
        other => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            return Err(Error::Config(format!(
                "unknown preset '{other}' (known: {})",
                known.join(", ")
            )));
        }
    }
    Ok(cfg)
}

/// Expectations implied by a config, plus what the named preset adds.
pub fn expectations_for(cfg: &ForestConfig, n_features: usize, preset: Option<&str>) -> Vec<Expectation> {
    let mut out = vec![Expectation::NodeSizeRespected];
    if cfg.uses_full_sample() && cfg.resolved_mtry(n_features) == n_features {
        out.push(Expectation::CanonicalEqualAcrossTrials);
        if cfg.tie_break == TieBreak::LowestFeatureIndex {
            out.push(Expectation::BitEqualAcrossTrials);
        }
    }
    if preset == Some("fig1") {
        out.push(Expectation::SomeLeafBelowMinimum);
    }
    out
}
