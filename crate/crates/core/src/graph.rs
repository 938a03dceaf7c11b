//! Cluster network and its minimum spanning tree.
//!
//! Clusters are nodes of a complete graph whose edge weights are
//! dissimilarities `1 − S(a, b)`, so the spanning tree links the most
//! related clusters directly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use petgraph::unionfind::UnionFind;
use serde_json::json;
use thiserror::Error;

use crate::model::{ClusterModel, SimilarityMatrix};
use crate::nkm::{distance_unchecked, truth_degree};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io: {0}")]
    IoError(#[from] io::Error),
    #[error("unknown graph format {0:?}")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGraph {
    pub node_count: usize,
    pub similarity: SimilarityMatrix,
    /// All `i < j` pairs in lexicographic order.
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub edges: Vec<Edge>,
    pub total_weight: f64,
}

impl SpanningTree {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.iter().any(|e| (e.i, e.j) == (i.min(j), i.max(j)))
    }
}

/// `1 / (1 + ‖c_a − c_b‖)` between every pair of centroids.
pub fn centroid_similarity(centroids: ArrayView2<'_, f64>) -> SimilarityMatrix {
    let k = centroids.nrows();
    let values = Array2::from_shape_fn((k, k), |(a, b)| {
        if a == b {
            1.0
        } else {
            truth_degree(distance_unchecked(centroids.row(a), centroids.row(b)))
        }
    });
    SimilarityMatrix::new(values).expect("centroid similarity is symmetric, reflexive and bounded")
}

pub fn cluster_similarity(model: &ClusterModel) -> SimilarityMatrix {
    centroid_similarity(model.centroids())
}

/// Complete graph over the clusters of `similarity`, weighted by dissimilarity.
pub fn graph_from_similarity(similarity: SimilarityMatrix) -> ClusterGraph {
    let k = similarity.size();
    let edges = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| Edge {
            i,
            j,
            weight: 1.0 - similarity.get(i, j),
        })
        .collect();
    ClusterGraph {
        node_count: k,
        similarity,
        edges,
    }
}

pub fn build_cluster_graph(model: &ClusterModel) -> ClusterGraph {
    graph_from_similarity(cluster_similarity(model))
}

/// Kruskal's algorithm; ties are broken by `(i, j)` order.
pub fn build_mst(g: &ClusterGraph) -> SpanningTree {
    let mut sorted = g.edges.clone();
    sorted.sort_by(|a, b| a.weight.total_cmp(&b.weight).then((a.i, a.j).cmp(&(b.i, b.j))));
    let mut forest = UnionFind::<usize>::new(g.node_count);
    let target = g.node_count.saturating_sub(1);
    let mut edges = Vec::with_capacity(target);
    for e in sorted {
        if edges.len() == target {
            break;
        }
        if forest.union(e.i, e.j) {
            edges.push(e);
        }
    }
    let total_weight = edges.iter().map(|e| e.weight).sum();
    SpanningTree { edges, total_weight }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Dot => "dot",
            Self::Json => "json",
        }
    }
}

impl FromStr for GraphFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(Self::Dot),
            "json" => Ok(Self::Json),
            other => Err(GraphError::UnknownFormat(other.to_owned())),
        }
    }
}

fn node_name(i: usize) -> String {
    format!("cluster_{i}")
}

/// Undirected Graphviz graph; spanning-tree edges carry `mst=true` and a bold style.
pub fn render_dot(g: &ClusterGraph, t: &SpanningTree) -> String {
    let mut out = String::from("graph clusters {\n");
    for i in 0..g.node_count {
        let _ = writeln!(out, "  {0} [label=\"{0}\"];", node_name(i));
    }
    for e in &g.edges {
        let _ = write!(out, "  {} -- {} [weight={}", node_name(e.i), node_name(e.j), e.weight);
        if t.contains(e.i, e.j) {
            out.push_str(", mst=true, style=bold");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

/// JSON document with `nodes`, `edges` and `total_mst_weight`; keys are sorted.
pub fn render_json(g: &ClusterGraph, t: &SpanningTree) -> String {
    let nodes: Vec<_> = (0..g.node_count)
        .map(|i| json!({ "id": i, "label": node_name(i) }))
        .collect();
    let edges: Vec<_> = g
        .edges
        .iter()
        .map(|e| json!({ "i": e.i, "j": e.j, "weight": e.weight, "mst": t.contains(e.i, e.j) }))
        .collect();
    let doc = json!({ "nodes": nodes, "edges": edges, "total_mst_weight": t.total_weight });
    let mut text = serde_json::to_string_pretty(&doc).expect("json values serialize");
    text.push('\n');
    text
}

pub fn render_graph(g: &ClusterGraph, t: &SpanningTree, format: GraphFormat) -> String {
    match format {
        GraphFormat::Dot => render_dot(g, t),
        GraphFormat::Json => render_json(g, t),
    }
}

pub fn export_graph(
    g: &ClusterGraph,
    t: &SpanningTree,
    format: GraphFormat,
    path: impl AsRef<Path>,
) -> Result<(), GraphError> {
    fs::write(path, render_graph(g, t, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn graph(weights: &[(usize, usize, f64)], k: usize) -> ClusterGraph {
        let mut s = Array2::<f64>::eye(k);
        for &(i, j, w) in weights {
            s[[i, j]] = 1.0 - w;
            s[[j, i]] = 1.0 - w;
        }
        graph_from_similarity(SimilarityMatrix::new(s).unwrap())
    }

    #[test]
    fn centroid_similarity_examples() {
        let s = centroid_similarity(array![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]].view());
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(0, 2), 0.5);
        assert_eq!(centroid_similarity(array![[3.0]].view()).values(), array![[1.0]].view());
    }

    #[test]
    fn edge_counts_and_weights() {
        assert_eq!(graph(&[], 2).edges.len(), 1);
        assert_eq!(graph(&[], 4).edges.len(), 6);
        let g = graph(&[(0, 1, 0.2)], 2);
        assert!((g.edges[0].weight - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mst_small_cases() {
        let t1 = build_mst(&graph(&[], 1));
        assert!(t1.edges.is_empty());
        assert_eq!(t1.total_weight, 0.0);
        let t2 = build_mst(&graph(&[(0, 1, 0.3)], 2));
        assert_eq!(t2.edges.len(), 1);
        let tri = build_mst(&graph(&[(0, 1, 0.1), (1, 2, 0.2), (0, 2, 0.9)], 3));
        assert!(tri.contains(0, 1) && tri.contains(1, 2) && !tri.contains(0, 2));
        assert!((tri.total_weight - 0.3).abs() < 1e-12);
    }

    #[test]
    fn mst_ties_follow_edge_order() {
        let t = build_mst(&graph(&[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)], 3));
        assert!(t.contains(0, 1) && t.contains(0, 2));
    }

    #[test]
    fn dot_output() {
        let one = graph(&[], 1);
        let dot = render_dot(&one, &build_mst(&one));
        assert_eq!(dot, "graph clusters {\n  cluster_0 [label=\"cluster_0\"];\n}\n");
        let two = graph(&[(0, 1, 0.25)], 2);
        let dot = render_dot(&two, &build_mst(&two));
        assert!(dot.contains("cluster_0 -- cluster_1 [weight=0.25, mst=true, style=bold];"));
    }

    #[test]
    fn json_output() {
        let g = graph(&[(0, 1, 0.25)], 2);
        let t = build_mst(&g);
        let v: serde_json::Value = serde_json::from_str(&render_json(&g, &t)).unwrap();
        assert_eq!(v["edges"].as_array().unwrap().len(), 1);
        assert_eq!(v["edges"][0]["mst"], true);
        assert_eq!(v["total_mst_weight"], 0.25);
        assert_eq!(render_json(&g, &t), render_json(&g, &t));
        let text = render_json(&g, &t);
        let keys: Vec<usize> = ["\"edges\"", "\"nodes\"", "\"total_mst_weight\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn export_writes_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = graph(&[(0, 1, 0.1), (1, 2, 0.4), (0, 2, 0.7)], 3);
        let t = build_mst(&g);
        let a = dir.path().join("a.dot");
        let b = dir.path().join("b.dot");
        export_graph(&g, &t, GraphFormat::Dot, &a).unwrap();
        export_graph(&g, &t, GraphFormat::Dot, &b).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        assert!(export_graph(&g, &t, GraphFormat::Json, dir.path().join("missing/x.json")).is_err());
    }

    proptest! {
        #[test]
        fn mst_is_a_spanning_tree(points in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 1..9)) {
            let k = points.len();
            let c = Array2::from_shape_vec((k, 2), points.concat()).unwrap();
            let g = graph_from_similarity(centroid_similarity(c.view()));
            prop_assert_eq!(g.edges.len(), k * (k - 1) / 2);
            prop_assert!(g.edges.iter().all(|e| (0.0..=1.0).contains(&e.weight)));
            let t = build_mst(&g);
            prop_assert_eq!(t.edges.len(), k - 1);
            // k - 1 edges that connect every node form a tree
            let mut seen = vec![false; k];
            seen[0] = true;
            let mut changed = true;
            while changed {
                changed = false;
                for e in &t.edges {
                    if seen[e.i] != seen[e.j] {
                        seen[e.i] = true;
                        seen[e.j] = true;
                        changed = true;
                    }
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
            let sum: f64 = t.edges.iter().map(|e| e.weight).sum();
            prop_assert_eq!(sum, t.total_weight);
        }
    }
}
