//! Clustering diagnostics: size inequality, cross-cluster links, agreement.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// Gini coefficient over cluster sizes, evaluated on ascending order as
/// `(2/K) * sum_i (i/K - cumsum_i / total)`.
pub fn gini(sizes: &[usize]) -> Result<f64> {
    if sizes.is_empty() {
        return Err(Error::Validation("gini of an empty size list".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Validation("cluster sizes must be positive".into()));
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let k = sorted.len() as f64;
    let total: usize = sorted.iter().sum();
    let total = total as f64;
    let mut cumsum = 0usize;
    let mut acc = 0.0;
    for (idx, &s) in sorted.iter().enumerate() {
        cumsum += s;
        acc += (idx + 1) as f64 / k - cumsum as f64 / total;
    }
    Ok(2.0 / k * acc)
}

/// Which nodes to count when sizing clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeScope {
    Users,
    Items,
    Joint,
}

/// Sizes of non-empty clusters in first-appearance order.
pub fn cluster_sizes(labels: &[usize], n_users: usize, scope: SizeScope) -> Vec<usize> {
    let slice = match scope {
        SizeScope::Users => &labels[..n_users],
        SizeScope::Items => &labels[n_users..],
        SizeScope::Joint => labels,
    };
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut sizes = Vec::new();
    for &l in slice {
        let next = sizes.len();
        let slot = *index.entry(l).or_insert(next);
        if slot == sizes.len() {
            sizes.push(0);
        }
        sizes[slot] += 1;
    }
    sizes
}

pub fn cluster_size_histogram(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for &l in labels {
        *hist.entry(l).or_insert(0) += 1;
    }
    hist
}

/// Edges whose endpoints carry different labels.
pub fn cross_cluster_edges(graph: &BipartiteGraph, labels: &[usize]) -> usize {
    let nu = graph.n_users();
    graph
        .edges()
        .filter(|&(u, i)| labels[u] != labels[nu + i])
        .count()
}

/// Cross-cluster edges divided by `C(K, 2)`; zero when fewer than two clusters.
pub fn accl(graph: &BipartiteGraph, labels: &[usize]) -> f64 {
    let k = cluster_size_histogram(labels).len();
    if k < 2 {
        return 0.0;
    }
    let pairs = (k as f64) * (k as f64 - 1.0) / 2.0;
    cross_cluster_edges(graph, labels) as f64 / pairs
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table. Two
/// partitions that are both trivial in the same way score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "labelings have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = joint.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
