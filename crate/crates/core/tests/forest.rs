mod common;

use detforest::canonical::forests_equal_canonical;
use detforest::dataset::planted_score;
use detforest::io::{forest_from_json, forest_to_json};
use detforest::{
    canonicalize, forest_divergence, generate_synthetic_formulas, grow_tree, train_test_split,
    trees_equal_canonical, Aggregation, AggregationChoice, Dataset, Forest, ForestConfig,
    GrowConfig, Mtry, TieBreak,
};
use detforest::prng::derive_stream;

fn small_desk(seed: u64) -> (Dataset, Vec<usize>, Dataset) {
    let ds = generate_synthetic_formulas(1000, 12, seed).unwrap();
    let split = train_test_split(ds.n_rows(), 0.8, seed).unwrap();
    let test = ds.subset(&split.test);
    (ds, split.train, test)
}

#[test]
fn synthetic_labels_follow_the_planted_rule() {
    let ds = generate_synthetic_formulas(4598, 87, 11).unwrap();
    let mut counts = [0usize; 3];
    for &y in ds.labels() {
        counts[y] += 1;
    }
    assert_eq!(counts, [2759, 1150, 689]);

    // recompute the thresholds from the features alone
    let scores: Vec<f64> = ds.rows().map(|r| 2.0 * r[0] + r[1] - r[2]).collect();
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t1 = sorted[(4598 * 60usize).div_ceil(100) - 1];
    let t2 = sorted[(4598 * 85usize).div_ceil(100) - 1];
    for (i, (&s, row)) in scores.iter().zip(ds.rows()).enumerate() {
        assert_eq!(s, planted_score(row));
        let want = if s > t2 { 2 } else if s > t1 { 1 } else { 0 };
        assert_eq!(ds.label(i), want, "row {i}");
        assert!(row.iter().all(|&v| v >= 0.0));
    }
    ds.check_composition().unwrap();
}

#[test]
fn fit_is_deterministic_and_worker_independent() {
    let (ds, train, _) = small_desk(5);
    let cfg = ForestConfig {
        n_trees: 12,
        mtry: Mtry::Sqrt,
        seed: 99,
        ..Default::default()
    };
    let a = Forest::fit(&ds, &train, &cfg).unwrap();
    let b = Forest::fit_with_workers(&ds, &train, &cfg, 3).unwrap();
    assert_eq!(forest_to_json(&a).unwrap(), forest_to_json(&b).unwrap());
    let back = forest_from_json(&forest_to_json(&a).unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn bagged_trees_differ() {
    let (ds, train, _) = small_desk(6);
    let cfg = ForestConfig {
        n_trees: 50,
        max_depth: Some(6),
        seed: 3,
        ..preset_config_table2()
    };
    let f = Forest::fit(&ds, &train, &cfg).unwrap();
    assert_eq!(f.trees.len(), 50);
    assert_ne!(f.trees[0], f.trees[1]);
    let distinct = f
        .trees
        .iter()
        .enumerate()
        .filter(|(i, t)| f.trees[..*i].iter().all(|u| u != *t))
        .count();
    assert_eq!(distinct, 50);
}

fn preset_config_table2() -> ForestConfig {
    detforest::config::preset_config("table2").unwrap()
}

#[test]
fn no_bagging_gives_identical_trees() {
    let (ds, train, _) = small_desk(7);
    let cfg = ForestConfig {
        n_trees: 4,
        seed: 1,
        ..detforest::config::preset_config("table3").unwrap()
    };
    let f = Forest::fit(&ds, &train, &cfg).unwrap();
    assert!(f.trees.iter().all(|t| *t == f.trees[0]));
    // the single tree is grown on exactly the training rows
    assert_eq!(f.trees[0].root.n_samples(), train.len());
}

#[test]
fn divergence_against_self_is_zero() {
    let (ds, train, test) = small_desk(8);
    let cfg = ForestConfig {
        n_trees: 5,
        max_depth: Some(3),
        seed: 4,
        ..Default::default()
    };
    let f = Forest::fit(&ds, &train, &cfg).unwrap();
    let g = Forest::fit_with_workers(&ds, &train, &cfg, 2).unwrap();
    let r = forest_divergence(
        &[("a".into(), &f), ("b".into(), &f), ("c".into(), &g)],
        &test,
        AggregationChoice::PerForest,
    )
    .unwrap();
    assert_eq!(r.total_divergent(), 0);
    assert_eq!(r.n_test, test.n_rows());
    for i in 0..3 {
        assert_eq!(r.matrix[i][i], 0);
    }
    assert!(forest_divergence(&[("a".into(), &f)], &test, AggregationChoice::PerForest).is_err());
}

#[test]
fn aggregation_modes_diverge_with_impure_leaves() {
    let (ds, train, test) = small_desk(9);
    let cfg = ForestConfig {
        n_trees: 20,
        mtry: Mtry::Sqrt,
        max_depth: Some(3),
        seed: 2024,
        ..Default::default()
    };
    let vote = Forest::fit(&ds, &train, &ForestConfig { aggregation: Aggregation::MajorityVote, ..cfg.clone() }).unwrap();
    let prob = Forest::fit(&ds, &train, &cfg).unwrap();
    assert_eq!(vote.trees, prob.trees);
    let r = forest_divergence(
        &[("vote".into(), &vote), ("prob".into(), &prob)],
        &test,
        AggregationChoice::PerForest,
    )
    .unwrap();
    // pinned from the first run of this configuration
    assert_eq!(r.pairs[0].n_divergent, 19);
    assert_eq!(r.pairs[0].divergent_rows.len(), 19);
    assert_eq!(r.matrix[1][0], r.matrix[0][1]);

    let forced = forest_divergence(
        &[("vote".into(), &vote), ("prob".into(), &prob)],
        &test,
        AggregationChoice::Override(Aggregation::MajorityVote),
    )
    .unwrap();
    assert_eq!(forced.total_divergent(), 0);
    let table = r.render_table();
    assert!(table.contains("vote |"), "{table}");
}

#[test]
fn pure_leaves_make_aggregations_agree() {
    let (ds, train, test) = small_desk(10);
    let cfg = ForestConfig {
        n_trees: 15,
        mtry: Mtry::Sqrt,
        seed: 1,
        ..Default::default()
    };
    let f = Forest::fit(&ds, &train, &cfg).unwrap();
    for x in test.rows() {
        assert_eq!(f.predict_majority(x).unwrap(), f.predict_argmax_proba(x).unwrap());
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let (ds, train, _) = small_desk(11);
    let cfg = ForestConfig { n_trees: 2, seed: 0, ..Default::default() };
    let f = Forest::fit(&ds, &train, &cfg).unwrap();
    assert!(f.predict(&[1.0, 2.0]).is_err());
    let other = generate_synthetic_formulas(10, 5, 0).unwrap();
    assert!(forest_divergence(
        &[("a".into(), &f), ("b".into(), &f)],
        &other,
        AggregationChoice::PerForest
    )
    .is_err());
    let bad = ForestConfig { mtry: Mtry::Count(13), ..cfg };
    assert!(Forest::fit(&ds, &train, &bad).is_err());
}

#[test]
fn tie_policies_give_the_same_canonical_tree() {
    let ds = common::duplicated_feature_dataset();
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let lowest = grow_tree(&ds, &rows, &GrowConfig::full(3), &mut derive_stream(0, 0)).unwrap();
    let cfg = GrowConfig { tie_break: TieBreak::FirstInDrawOrder, ..GrowConfig::full(3) };
    let mut saw_copy = false;
    for seed in 0..10 {
        let t = grow_tree(&ds, &rows, &cfg, &mut derive_stream(seed, 0)).unwrap();
        assert_eq!(canonicalize(&t), canonicalize(&lowest));
        saw_copy |= common::internal_nodes(&t).iter().any(|n| n.feature == 1);
    }
    assert!(saw_copy);
    // lowest-index policy never uses the copy
    assert!(common::internal_nodes(&lowest).iter().all(|n| n.feature != 1));

    let shallow = grow_tree(
        &ds,
        &rows,
        &GrowConfig { max_depth: Some(1), ..GrowConfig::full(3) },
        &mut derive_stream(0, 0),
    )
    .unwrap();
    assert!(!trees_equal_canonical(&lowest, &shallow));
}

#[test]
fn forest_canonical_equality_needs_same_tree_count() {
    let (ds, train, _) = small_desk(12);
    let cfg = ForestConfig { n_trees: 2, seed: 0, ..Default::default() };
    let a = Forest::fit(&ds, &train, &cfg).unwrap();
    let b = Forest::fit(&ds, &train, &ForestConfig { n_trees: 3, ..cfg }).unwrap();
    assert!(forests_equal_canonical(&a, &a));
    assert!(!forests_equal_canonical(&a, &b));
}
