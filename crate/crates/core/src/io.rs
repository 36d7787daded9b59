//! Forest documents (versioned JSON) and Graphviz export.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cart::{DecisionTree, TreeNode};
use crate::error::{Error, Result};
use crate::forest::Forest;

pub const FOREST_FORMAT: &str = "detforest-forest";
pub const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    forest: Forest,
}

#[derive(Serialize)]
struct ForestDocumentRef<'a> {
    format: &'a str,
    version: u32,
    forest: &'a Forest,
}

pub fn forest_to_json(forest: &Forest) -> Result<String> {
    let doc = ForestDocumentRef {
        format: FOREST_FORMAT,
        version: FOREST_VERSION,
        forest,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn forest_from_json(text: &str) -> Result<Forest> {
    let doc: ForestDocument = serde_json::from_str(text)?;
    if doc.format != FOREST_FORMAT {
        return Err(Error::Schema(format!("unexpected format '{}'", doc.format)));
    }
    if doc.version != FOREST_VERSION {
        return Err(Error::Schema(format!("unsupported version {}", doc.version)));
    }
    let f = doc.forest;
    if f.trees.len() != f.config.n_trees {
        return Err(Error::Schema(format!(
            "{} trees stored but n_trees = {}",
            f.trees.len(),
            f.config.n_trees
        )));
    }
    if let Some(k) = f
        .trees
        .iter()
        .position(|t| t.n_features != f.n_features || t.n_classes != f.n_classes)
    {
        return Err(Error::Schema(format!("tree {k} disagrees on feature or class count")));
    }
    Ok(f)
}

pub fn save_forest(forest: &Forest, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, forest_to_json(forest)?)?;
    Ok(())
}

pub fn load_forest(path: impl AsRef<Path>) -> Result<Forest> {
    forest_from_json(&std::fs::read_to_string(path)?)
}

pub fn tree_to_json(tree: &DecisionTree) -> Result<String> {
    let mut s = serde_json::to_string_pretty(tree)?;
    s.push('\n');
    Ok(s)
}

fn counts_label(counts: &[usize]) -> String {
    let parts: Vec<String> = counts.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Graphviz digraph, nodes numbered in pre-order. Left edges are labelled
/// `true` (the `<=` branch).
pub fn tree_to_dot(tree: &DecisionTree) -> String {
    let mut out = String::from("digraph tree {\n    node [shape=box, fontname=\"monospace\"];\n");
    let mut next_id = 0usize;
    let mut stack: Vec<(&TreeNode, Option<(usize, bool)>)> = vec![(&tree.root, None)];
    let mut edges = String::new();
    while let Some((node, parent)) = stack.pop() {
        let id = next_id;
        next_id += 1;
        let stats = format!(
            "n={} | gini={:.6} | counts={}",
            node.n_samples(),
            node.gini(),
            counts_label(&node.class_counts().0)
        );
        let label = match node {
            TreeNode::Internal(n) => format!("f{} ≤ {} | {stats}", n.feature, n.threshold),
            TreeNode::Leaf(_) => format!("leaf | {stats}"),
        };
        let _ = writeln!(out, "    n{id} [label=\"{label}\"];");
        if let Some((pid, is_left)) = parent {
            let _ = writeln!(edges, "    n{pid} -> n{id} [label=\"{is_left}\"];");
        }
        if let TreeNode::Internal(n) = node {
            stack.push((&n.right, Some((id, false))));
            stack.push((&n.left, Some((id, true))));
        }
    }
    out.push_str(&edges);
    out.push_str("}\n");
    out
}
