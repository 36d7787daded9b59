//! Acceptance criteria. Runs every criterion in sequence (so the timing
//! budgets are not distorted by parallel test threads), prints one line per
//! criterion and fails if any criterion fails.
//!
//! cargo test -p detforest-core --test acceptance

mod common;

use std::time::{Duration, Instant};

use detforest::canonical::forests_equal_canonical;
use detforest::cart::oracle::exhaustive_split_oracle_min_leaf;
use detforest::config::preset_config;
use detforest::experiment::small_leaf_under_large_parent;
use detforest::io::forest_to_json;
use detforest::prng::{derive_stream, RngState};
use detforest::{
    best_split, gini, grow_tree, trees_equal_canonical, Aggregation, ClassCounts, Dataset,
    DecisionTree, Forest, ForestConfig, GrowConfig, NodeSizeSemantics, TieBreak,
};

const SEED: u64 = 2024;

struct Desk {
    ds: Dataset,
    train: Vec<usize>,
    test: Dataset,
}

fn desk() -> Desk {
    let ds = detforest::generate_synthetic_formulas(4598, 87, SEED).unwrap();
    let split = detforest::train_test_split(ds.n_rows(), 0.8, SEED).unwrap();
    let test = ds.subset(&split.test);
    Desk {
        ds,
        train: split.train,
        test,
    }
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn crit1_gini() -> Outcome {
    let cases = [(vec![5, 5], 0.5), (vec![10, 0], 0.0), (vec![1, 1, 1], 2.0 / 3.0)];
    for (counts, want) in cases {
        let got = gini(&ClassCounts(counts.clone()));
        ensure((got - want).abs() <= 1e-15, format!("gini({counts:?}) = {got}, want {want}"))?;
    }
    let mut rng = derive_stream(SEED, 1);
    let mut checked = 0;
    for _ in 0..20_000 {
        let c = 1 + ok(rng.bounded_usize(5))?;
        let counts: Vec<usize> = (0..c).map(|_| rng.bounded_usize(50).unwrap()).collect();
        let g = gini(&ClassCounts(counts.clone()));
        let upper = 1.0 - 1.0 / c as f64;
        ensure(
            (0.0..=upper + 1e-15).contains(&g),
            format!("gini({counts:?}) = {g} outside [0, {upper}]"),
        )?;
        checked += 1;
    }
    Ok(format!("3 exact examples, {checked} fuzzed count vectors in [0, 1-1/c]"))
}

fn random_small_dataset(rng: &mut RngState) -> Dataset {
    let n = 2 + rng.bounded_usize(39).unwrap();
    let p = 1 + rng.bounded_usize(6).unwrap();
    let c = 1 + rng.bounded_usize(3).unwrap();
    let grid = 2 + rng.bounded_usize(9).unwrap();
    let features = (0..n * p)
        .map(|_| rng.bounded_usize(grid).unwrap() as f64 * 0.5)
        .collect();
    let labels = (0..n).map(|_| rng.bounded_usize(c).unwrap()).collect();
    let names = (0..p).map(|i| format!("f{i}")).collect();
    Dataset::new(features, labels, names).unwrap()
}

fn crit2_oracle() -> Outcome {
    let mut rng = derive_stream(SEED, 2);
    let mut checked = 0;
    let mut with_split = 0;
    for case in 0..600 {
        let ds = random_small_dataset(&mut rng);
        // a random non-empty row subset stands in for an arbitrary tree node
        let mut rows: Vec<usize> = (0..ds.n_rows()).filter(|_| rng.bounded(4).unwrap() > 0).collect();
        if rows.is_empty() {
            rows.push(0);
        }
        let parent = ClassCounts::from_rows(&ds, &rows);
        let candidates = ok(rng.shuffle(ds.n_features()))?;
        for tie in [TieBreak::FirstInDrawOrder, TieBreak::LowestFeatureIndex] {
            for (sem, min) in [(NodeSizeSemantics::MinSplit, 1), (NodeSizeSemantics::MinLeaf, 3)] {
                let cfg = GrowConfig {
                    mtry: ds.n_features(),
                    min_node_size: min,
                    node_size_semantics: sem,
                    max_depth: None,
                    tie_break: tie,
                };
                let min_leaf = if sem == NodeSizeSemantics::MinLeaf { min } else { 1 };
                let optimal = exhaustive_split_oracle_min_leaf(&ds, &rows, &parent, min_leaf);
                let got = best_split(&ds, &rows, &candidates, &parent, &cfg);
                match got {
                    None => ensure(optimal.is_empty(), format!("case {case}: no split but oracle has {}", optimal.len()))?,
                    Some(s) => {
                        ensure(
                            optimal.iter().any(|o| o.feature == s.feature && o.threshold == s.threshold),
                            format!("case {case}: split (f{}, {}) not optimal", s.feature, s.threshold),
                        )?;
                        with_split += 1;
                    }
                }
            }
        }
        checked += 1;
    }
    ensure(checked >= 500, "fewer than 500 datasets")?;
    Ok(format!("{checked} datasets x 4 configs, {with_split} splits inside the oracle set"))
}

fn crit3_tied_features() -> Outcome {
    let ds = common::duplicated_feature_dataset();
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let grow = |tie: TieBreak, seed: u64| -> Result<DecisionTree, String> {
        let cfg = GrowConfig {
            tie_break: tie,
            ..GrowConfig::full(ds.n_features())
        };
        ok(grow_tree(&ds, &rows, &cfg, &mut derive_stream(seed, 0)))
    };
    let stochastic: Vec<DecisionTree> = (0..20)
        .map(|s| grow(TieBreak::FirstInDrawOrder, s))
        .collect::<Result<_, _>>()?;
    let mut distinct: Vec<&DecisionTree> = Vec::new();
    for t in &stochastic {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }
    let canonical = stochastic
        .iter()
        .filter(|t| trees_equal_canonical(t, &stochastic[0]))
        .count();
    ensure(distinct.len() >= 2, format!("only {} distinct first-in-draw trees", distinct.len()))?;
    ensure(canonical == 20, format!("{canonical}/20 canonical-equal"))?;

    let deterministic: Vec<DecisionTree> = (0..20)
        .map(|s| grow(TieBreak::LowestFeatureIndex, s))
        .collect::<Result<_, _>>()?;
    let bit = deterministic.iter().filter(|t| **t == deterministic[0]).count();
    ensure(bit == 20, format!("{bit}/20 lowest-index trees bit-identical"))?;
    Ok(format!(
        "first-in-draw: {} distinct bit-level, {canonical}/20 canonical-equal; lowest-index: {bit}/20 bit-identical",
        distinct.len()
    ))
}

fn table3(min_node_size: usize, seed: u64) -> ForestConfig {
    ForestConfig {
        min_node_size,
        node_size_semantics: NodeSizeSemantics::MinSplit,
        seed,
        ..preset_config("table3").unwrap()
    }
}

fn crit4_min_node_default(d: &Desk) -> Outcome {
    // one side mimics a default of 10, the other a default of 1; seeds differ
    let ten = ok(Forest::fit(&d.ds, &d.train, &table3(10, 42)))?;
    let one_a = ok(Forest::fit(&d.ds, &d.train, &table3(1, SEED)))?;
    let one_b = ok(Forest::fit(&d.ds, &d.train, &table3(1, 42)))?;
    ensure(
        !trees_equal_canonical(&ten.trees[0], &one_a.trees[0]),
        "min_node_size 10 and 1 gave canonically equal trees",
    )?;
    ensure(
        trees_equal_canonical(&one_a.trees[0], &one_b.trees[0]),
        "min_node_size 1 on both sides still differs",
    )?;
    Ok(format!(
        "10 vs 1: different ({} vs {} nodes); 1 vs 1: canonical-equal",
        ten.trees[0].n_nodes(),
        one_a.trees[0].n_nodes()
    ))
}

fn crit5_node_size_semantics(d: &Desk) -> Outcome {
    let fig1 = ok(Forest::fit(&d.ds, &d.train, &ForestConfig { seed: SEED, ..preset_config("fig1").unwrap() }))?;
    let fig2 = ok(Forest::fit(&d.ds, &d.train, &ForestConfig { seed: SEED, ..preset_config("fig2").unwrap() }))?;
    let t1 = &fig1.trees[0];
    let t2 = &fig2.trees[0];
    let small = small_leaf_under_large_parent(t1, 1000)
        .ok_or("fig1 tree has no leaf < 1000 under a parent >= 1000")?;
    let min_leaf2 = t2.leaves().iter().map(|l| l.n_samples).min().unwrap_or(0);
    ensure(!t2.root.is_leaf(), "fig2 tree did not split")?;
    ensure(min_leaf2 >= 1000, format!("fig2 smallest leaf {min_leaf2}"))?;

    // an independently seeded min-split 1000 tree with random tie-breaking
    let min_split = ForestConfig {
        tie_break: TieBreak::FirstInDrawOrder,
        seed: 7,
        ..preset_config("fig1").unwrap()
    };
    let other = ok(Forest::fit(&d.ds, &d.train, &min_split))?;
    ensure(trees_equal_canonical(t1, &other.trees[0]), "fig1 differs from min-split 1000 tree")?;
    ensure(!trees_equal_canonical(t1, t2), "fig1 equals fig2")?;
    Ok(format!(
        "fig1 leaf of {} under node of {}; fig2 smallest leaf {min_leaf2}; fig1 == min-split, fig1 != fig2",
        small.1, small.0
    ))
}

fn divergent(f: &Forest, test: &Dataset) -> Result<usize, String> {
    let vote = ok(f.predict_dataset(test, Aggregation::MajorityVote))?;
    let prob = ok(f.predict_dataset(test, Aggregation::MeanProbability))?;
    Ok(vote.iter().zip(&prob).filter(|(a, b)| a != b).count())
}

fn crit6_aggregation(d: &Desk) -> Outcome {
    ensure(d.test.n_rows() == 920, format!("test set has {} rows", d.test.n_rows()))?;
    let capped = ForestConfig {
        max_depth: Some(5),
        seed: SEED,
        ..Default::default()
    };
    let f = ok(Forest::fit(&d.ds, &d.train, &capped))?;
    let impure = f.trees.iter().flat_map(|t| t.leaves()).any(|l| l.gini > 0.0);
    ensure(impure, "depth-5 forest has only pure leaves")?;
    let n_capped = divergent(&f, &d.test)?;
    ensure(n_capped >= 1, "majority vote and mean probability agree everywhere at depth 5")?;

    let full = ForestConfig {
        seed: SEED,
        ..Default::default()
    };
    let f = ok(Forest::fit(&d.ds, &d.train, &full))?;
    let pure = f.trees.iter().flat_map(|t| t.leaves()).all(|l| l.gini == 0.0);
    ensure(pure, "fully grown forest has impure leaves")?;
    let n_full = divergent(&f, &d.test)?;
    ensure(n_full == 0, format!("fully grown forest diverges on {n_full} rows"))?;
    Ok(format!(
        "depth 5: {} of 920 equal classifications; pure leaves: {} of 920",
        920 - n_capped,
        920 - n_full
    ))
}

fn crit7_determinism(d: &Desk) -> Outcome {
    let cfg = ForestConfig {
        seed: SEED,
        ..Default::default()
    };
    let a = ok(forest_to_json(&ok(Forest::fit_with_workers(&d.ds, &d.train, &cfg, 1))?))?;
    let b = ok(forest_to_json(&ok(Forest::fit_with_workers(&d.ds, &d.train, &cfg, 1))?))?;
    let c = ok(forest_to_json(&ok(Forest::fit_with_workers(&d.ds, &d.train, &cfg, 4))?))?;
    ensure(a == b, "two single-worker runs differ")?;
    ensure(a == c, "1 worker and 4 workers differ")?;
    Ok(format!("3 runs (workers 1, 1, 4) byte-identical, {} bytes", a.len()))
}

fn crit8_no_bagging(d: &Desk) -> Outcome {
    let cfg = ForestConfig {
        n_trees: 5,
        seed: SEED,
        ..preset_config("table3").unwrap()
    };
    let f = ok(Forest::fit(&d.ds, &d.train, &cfg))?;
    let equal = f.trees.iter().filter(|t| trees_equal_canonical(t, &f.trees[0])).count();
    ensure(equal == 5, format!("{equal}/5 canonical-equal"))?;
    let again = ok(Forest::fit(&d.ds, &d.train, &ForestConfig { seed: SEED + 1, ..cfg }))?;
    ensure(forests_equal_canonical(&f, &again), "a different seed changed the trees")?;
    Ok(format!("5/5 trees canonical-equal ({} nodes each)", f.trees[0].n_nodes()))
}

fn crit9_accuracy(d: &Desk) -> Outcome {
    let cfg = ForestConfig {
        seed: SEED,
        ..Default::default()
    };
    let f = ok(Forest::fit(&d.ds, &d.train, &cfg))?;
    let acc = ok(f.accuracy(&d.test))?;
    ensure(acc > 0.85, format!("accuracy {acc:.4} <= 0.85"))?;
    Ok(format!("50 trees, test accuracy {acc:.4}"))
}

fn main() {
    let d = desk();
    type Criterion<'a> = (u32, &'a str, u64, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (1, "gini unit suite", 1, Box::new(crit1_gini)),
        (2, "oracle equivalence", 30, Box::new(crit2_oracle)),
        (3, "tied split features", 10, Box::new(crit3_tied_features)),
        (4, "min_node_size default mismatch", 60, Box::new(|| crit4_min_node_default(&d))),
        (5, "node-size semantics", 60, Box::new(|| crit5_node_size_semantics(&d))),
        (6, "aggregation modes", 120, Box::new(|| crit6_aggregation(&d))),
        (7, "determinism and parallel invariance", 120, Box::new(|| crit7_determinism(&d))),
        (8, "no-bagging trees identical", 60, Box::new(|| crit8_no_bagging(&d))),
        (9, "prediction sanity", 120, Box::new(|| crit9_accuracy(&d))),
    ];
    let mut failures = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (status, detail) = match (&result, over) {
            (Ok(msg), false) => ("PASS", msg.clone()),
            (Ok(msg), true) => ("FAIL", format!("{msg}; runtime over {budget} s budget")),
            (Err(msg), _) => ("FAIL", msg.clone()),
        };
        println!("{status} [{id}] {name} ({:.2} s): {detail}", elapsed.as_secs_f64());
        if status == "FAIL" {
            failures.push(id);
        }
    }
    if failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}
