//! Fixtures shared by the solver benchmarks.

use cocluster::synth::random_bipartite;
use cocluster::{BipartiteGraph, EdgeList};

/// Random graph with the user/item ratio of a mid-sized check-in dataset.
pub fn random_graph(n_edges: usize, seed: u64) -> BipartiteGraph {
    let n_users = (n_edges / 33).max(2);
    let n_items = (n_edges / 24).max(2);
    random_bipartite(n_users, n_items, n_edges, seed).expect("valid fixture parameters")
}

/// Token edge list for benchmarking ingestion.
pub fn edge_list(graph: &BipartiteGraph) -> EdgeList {
    graph
        .edges()
        .map(|(u, i)| {
            (
                graph.user_tokens()[u].clone(),
                graph.item_tokens()[i].clone(),
            )
        })
        .collect()
}
