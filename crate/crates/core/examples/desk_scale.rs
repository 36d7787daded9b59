//! Trains the main presets on synthetic formula data and prints a summary.
//!
//! cargo run --release -p detforest-core --example desk_scale [seed]

use detforest::config::preset_config;
use detforest::experiment::small_leaf_under_large_parent;
use detforest::{generate_synthetic_formulas, train_test_split, Aggregation, Forest, ForestConfig, Mtry};

fn main() -> detforest::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let ds = generate_synthetic_formulas(4598, 87, seed)?;
    let split = train_test_split(ds.n_rows(), 0.8, seed)?;
    let test = ds.subset(&split.test);
    let mut counts = [0usize; 3];
    for &y in ds.labels() {
        counts[y] += 1;
    }
    println!("class counts {counts:?}");

    for name in ["table2", "table3", "fig1", "fig2"] {
        let cfg = ForestConfig { seed, ..preset_config(name)? };
        let f = Forest::fit_with_workers(&ds, &split.train, &cfg, 4)?;
        let t = &f.trees[0];
        println!(
            "{name:>7}: trees={} nodes(tree0)={} depth={} accuracy={:.4} min_leaf={} small_leaf={:?}",
            f.trees.len(),
            t.n_nodes(),
            t.depth(),
            f.accuracy(&test)?,
            t.leaves().iter().map(|l| l.n_samples).min().unwrap_or(0),
            small_leaf_under_large_parent(t, 1000),
        );
    }

    for mtry in [Mtry::Sqrt, Mtry::Count(30), Mtry::All] {
        for s2 in [seed, seed + 1] {
            let cfg = ForestConfig { mtry, seed: s2, ..Default::default() };
            let ds2 = generate_synthetic_formulas(4598, 87, s2)?;
            let sp2 = train_test_split(ds2.n_rows(), 0.8, s2)?;
            let f = Forest::fit_with_workers(&ds2, &sp2.train, &cfg, 4)?;
            println!("mtry {mtry:?} seed {s2}: accuracy {:.4}", f.accuracy(&ds2.subset(&sp2.test))?);
        }
    }
    let capped = ForestConfig { max_depth: Some(5), seed, ..Default::default() };
    let f = Forest::fit_with_workers(&ds, &split.train, &capped, 4)?;
    let vote = f.predict_dataset(&test, Aggregation::MajorityVote)?;
    let prob = f.predict_dataset(&test, Aggregation::MeanProbability)?;
    let diff = vote.iter().zip(&prob).filter(|(a, b)| a != b).count();
    println!("depth-5 forest: vote vs mean-probability divergent on {diff}/{}", test.n_rows());
    Ok(())
}
