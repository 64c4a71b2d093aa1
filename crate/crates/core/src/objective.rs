//! Balanced co-clustering objective and the classical bipartite quality
//! functions it generalizes.
//!
//! A labeling assigns one integer per node in the joint index space (users
//! first, then items). A co-cluster is the set of nodes sharing a label.
//! The canonical objective counts each user-item pair once:
//!
//! ```text
//! sum_k [ s_k - gamma * (sum_{u in U_k} w_u) * (sum_{v in V_k} w_v) ]
//! ```
//!
//! where `s_k` is the number of edges inside cluster `k`.

use std::collections::HashMap;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::weighting::WeightVector;

/// Cluster label per node, users first then items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn singletons(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for Labeling {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Labeling {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Dense cluster index per node, assigned by first appearance over node order.
pub(crate) fn dense_clusters(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: HashMap<usize, usize> = HashMap::new();
    let dense = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

fn check_len(graph: &BipartiteGraph, labels: &[usize]) -> Result<()> {
    if labels.len() != graph.n_nodes() {
        return Err(Error::Validation(format!(
            "labeling has {} entries, graph has {} nodes",
            labels.len(),
            graph.n_nodes()
        )));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Validation(format!(
            "gamma must be finite and non-negative, got {gamma}"
        )));
    }
    Ok(())
}

/// Per-cluster intra-edge counts.
fn intra_edges(graph: &BipartiteGraph, dense: &[usize], k: usize) -> Vec<u64> {
    let nu = graph.n_users();
    let mut s = vec![0u64; k];
    for (u, i) in graph.edges() {
        let c = dense[u];
        if c == dense[nu + i] {
            s[c] += 1;
        }
    }
    s
}

/// Number of edges whose endpoints share a label.
pub fn intra_cluster_edges(graph: &BipartiteGraph, labels: &[usize]) -> usize {
    let nu = graph.n_users();
    graph
        .edges()
        .filter(|&(u, i)| labels[u] == labels[nu + i])
        .count()
}

/// Grouped pair-sum objective in O(|E| + K).
pub fn objective_pairsum(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    labels: &[usize],
    gamma: f64,
) -> Result<f64> {
    check_len(graph, labels)?;
    check_gamma(gamma)?;
    let nu = graph.n_users();
    let (dense, k) = dense_clusters(labels);
    let s = intra_edges(graph, &dense, k);
    let mut wu = vec![0.0f64; k];
    let mut wv = vec![0.0f64; k];
    for (node, &c) in dense.iter().enumerate() {
        if node < nu {
            wu[c] += weights.w_user[node];
        } else {
            wv[c] += weights.w_item[node - nu];
        }
    }
    Ok((0..k).map(|c| s[c] as f64 - gamma * (wu[c] * wv[c])).sum())
}

/// Literal trace evaluation `Tr(Y^T A Y) - gamma * Tr(Y^T w w^T Y)` by summing
/// over every ordered node pair in a shared cluster. The symmetric adjacency
/// counts each edge twice, so the edge term is halved; the weight term keeps
/// only user-item products, each unordered pair counted once. O(n^2 log d),
/// intended only for cross-validation on small graphs.
pub fn objective_trace(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    labels: &[usize],
    gamma: f64,
) -> Result<f64> {
    check_len(graph, labels)?;
    check_gamma(gamma)?;
    let n = graph.n_nodes();
    let nu = graph.n_users();
    let adjacency = |x: usize, y: usize| -> f64 {
        match (x < nu, y < nu) {
            (true, false) => graph.has_edge(x, y - nu) as u8 as f64,
            (false, true) => graph.has_edge(y, x - nu) as u8 as f64,
            _ => 0.0,
        }
    };
    let mut trace_a = 0.0;
    let mut cross_penalty = 0.0;
    for x in 0..n {
        for y in 0..n {
            if labels[x] != labels[y] {
                continue;
            }
            trace_a += adjacency(x, y);
            if (x < nu) != (y < nu) {
                cross_penalty += weights.node(x) * weights.node(y);
            }
        }
    }
    Ok(trace_a / 2.0 - gamma * (cross_penalty / 2.0))
}

/// Bipartite modularity with resolution `gamma`.
pub fn bipartite_modularity(graph: &BipartiteGraph, labels: &[usize], gamma: f64) -> Result<f64> {
    check_len(graph, labels)?;
    let m = graph.n_edges() as f64;
    let nu = graph.n_users();
    let (dense, k) = dense_clusters(labels);
    let s = intra_edges(graph, &dense, k);
    let mut sigma_u = vec![0u64; k];
    let mut sigma_v = vec![0u64; k];
    for (node, &c) in dense.iter().enumerate() {
        if node < nu {
            sigma_u[c] += graph.user_degree(node) as u64;
        } else {
            sigma_v[c] += graph.item_degree(node - nu) as u64;
        }
    }
    let total: f64 = (0..k)
        .map(|c| s[c] as f64 - gamma * (sigma_u[c] as f64 * sigma_v[c] as f64) / m)
        .sum();
    Ok(total / m)
}

/// Bipartite Constant Potts Model: `sum_k (s_k - gamma * |U_k| * |V_k|)`.
pub fn cpm_score(graph: &BipartiteGraph, labels: &[usize], gamma: f64) -> Result<f64> {
    check_len(graph, labels)?;
    let nu = graph.n_users();
    let (dense, k) = dense_clusters(labels);
    let s = intra_edges(graph, &dense, k);
    let mut users = vec![0u64; k];
    let mut items = vec![0u64; k];
    for (node, &c) in dense.iter().enumerate() {
        if node < nu {
            users[c] += 1;
        } else {
            items[c] += 1;
        }
    }
    Ok((0..k)
        .map(|c| s[c] as f64 - gamma * ((users[c] * items[c]) as f64))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusiveLasso {
    /// `sum_k (vol_k - W/K)^2`
    pub deviation_form: f64,
    /// `sum_k vol_k^2`
    pub trace_form: f64,
    pub clusters: usize,
}

/// Volume-balance penalty over the clusters of `labels`. Volumes sum user and
/// item weights alike.
pub fn exclusive_lasso(weights: &WeightVector, labels: &[usize]) -> Result<ExclusiveLasso> {
    let n = weights.w_user.len() + weights.w_item.len();
    if labels.len() != n {
        return Err(Error::Validation(format!(
            "labeling has {} entries, weights cover {n} nodes",
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Validation("no clusters".into()));
    }
    let (dense, k) = dense_clusters(labels);
    let mut vol = vec![0.0f64; k];
    for (node, &c) in dense.iter().enumerate() {
        vol[c] += weights.node(node);
    }
    Ok(lasso_from_volumes(&vol, weights.total()))
}

/// Deviation and trace forms from explicit cluster volumes.
pub fn lasso_from_volumes(volumes: &[f64], total_weight: f64) -> ExclusiveLasso {
    let k = volumes.len();
    let mean = total_weight / k as f64;
    ExclusiveLasso {
        deviation_form: volumes.iter().map(|v| (v - mean).powi(2)).sum(),
        trace_form: volumes.iter().map(|v| v * v).sum(),
        clusters: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, EdgeList};
    use crate::weighting::{compute_weights, WeightScheme};

    fn k22() -> BipartiteGraph {
        let e: EdgeList = [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]
            .into_iter()
            .collect();
        build_graph(&e).unwrap()
    }

    fn two_edges() -> BipartiteGraph {
        let e: EdgeList = [("u1", "v1"), ("u2", "v2")].into_iter().collect();
        build_graph(&e).unwrap()
    }

    /// Direct enumeration over user-item pairs with a Kronecker delta.
    fn pair_enumeration(g: &BipartiteGraph, w: &WeightVector, labels: &[usize], gamma: f64) -> f64 {
        let nu = g.n_users();
        let mut total = 0.0;
        for u in 0..nu {
            for i in 0..g.n_items() {
                if labels[u] == labels[nu + i] {
                    let b = g.has_edge(u, i) as u8 as f64;
                    total += b - gamma * w.w_user[u] * w.w_item[i];
                }
            }
        }
        total
    }

    #[test]
    fn one_cluster_k22_cpm() {
        let g = k22();
        let w = compute_weights(&g, &WeightScheme::CpmUnit).unwrap();
        let labels = Labeling::uniform(4);
        assert_eq!(pair_enumeration(&g, &w, &labels, 1.0), 0.0);
        assert_eq!(objective_pairsum(&g, &w, &labels, 1.0).unwrap(), 0.0);
        assert_eq!(cpm_score(&g, &labels, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_zero_counts_intra_edges() {
        let g = k22();
        let w = compute_weights(&g, &WeightScheme::Hws).unwrap();
        let labels = [0, 1, 0, 5];
        let expected = intra_cluster_edges(&g, &labels) as f64;
        assert_eq!(expected, 1.0);
        assert_eq!(objective_pairsum(&g, &w, &labels, 0.0).unwrap(), expected);
    }

    #[test]
    fn paired_clusters_two_edges() {
        let g = two_edges();
        let w = compute_weights(&g, &WeightScheme::CpmUnit).unwrap();
        // u1=0, u2=1, v1=2, v2=3
        let labels = [0, 1, 0, 1];
        assert_eq!(pair_enumeration(&g, &w, &labels, 0.5), 1.0);
        assert_eq!(objective_pairsum(&g, &w, &labels, 0.5).unwrap(), 1.0);
        assert_eq!(objective_trace(&g, &w, &labels, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn trace_singletons_and_all_one() {
        let g = k22();
        let w = compute_weights(&g, &WeightScheme::Hws).unwrap();
        assert_eq!(
            objective_trace(&g, &w, &Labeling::singletons(4), 3.0).unwrap(),
            0.0
        );
        assert_eq!(
            objective_trace(&g, &w, &Labeling::uniform(4), 0.0).unwrap(),
            4.0
        );
    }

    #[test]
    fn negative_gamma_rejected() {
        let g = k22();
        let w = compute_weights(&g, &WeightScheme::Hws).unwrap();
        assert!(objective_pairsum(&g, &w, &[0; 4], -0.1).is_err());
        assert!(objective_trace(&g, &w, &[0; 4], -0.1).is_err());
        assert!(objective_pairsum(&g, &w, &[0; 3], 0.1).is_err());
    }

    #[test]
    fn modularity_extremes() {
        let g = k22();
        assert_eq!(
            bipartite_modularity(&g, &Labeling::uniform(4), 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            bipartite_modularity(&g, &Labeling::singletons(4), 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn cpm_singletons_zero() {
        let g = k22();
        assert_eq!(cpm_score(&g, &Labeling::singletons(4), 2.5).unwrap(), 0.0);
    }

    #[test]
    fn lasso_volumes_one_three() {
        let l = lasso_from_volumes(&[1.0, 3.0], 4.0);
        assert_eq!(l.deviation_form, 2.0);
        assert_eq!(l.trace_form, 10.0);
        assert_eq!(l.trace_form - 16.0 / 2.0, l.deviation_form);
    }

    #[test]
    fn lasso_equal_volumes_zero_deviation() {
        let g = k22();
        let w = compute_weights(&g, &WeightScheme::CpmUnit).unwrap();
        let l = exclusive_lasso(&w, &[0, 1, 0, 1]).unwrap();
        assert_eq!(l.deviation_form, 0.0);
        assert_eq!(l.clusters, 2);
    }
}
