//! Edge-list ingestion and the immutable bidirectional CSR bipartite graph.
//!
//! Nodes live in one joint index space: users occupy `0..n_users` and items
//! occupy `n_users..n_users + n_items`. The two CSR halves store local ids
//! (item index per user, user index per item).

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Interaction pairs in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub pairs: Vec<(String, String)>,
}

impl EdgeList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, user: impl Into<String>, item: impl Into<String>) {
        self.pairs.push((user.into(), item.into()));
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl<U: Into<String>, I: Into<String>> FromIterator<(U, I)> for EdgeList {
    fn from_iter<T: IntoIterator<Item = (U, I)>>(iter: T) -> Self {
        Self {
            pairs: iter
                .into_iter()
                .map(|(u, i)| (u.into(), i.into()))
                .collect(),
        }
    }
}

/// Reads `<user>\t<item>` lines. Lines starting with `#` and blank lines are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut edges = EdgeList::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (user, item) = match (fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(i), None) => (u, i),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected 2 tab-separated fields, found {}",
                        line.split('\t').count()
                    ),
                })
            }
        };
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty token".into(),
            });
        }
        edges.push(user, item);
    }
    Ok(edges)
}

pub fn parse_edge_str(text: &str) -> Result<EdgeList> {
    parse_edge_list(text.as_bytes())
}

/// Writes every edge as `<user>\t<item>`, ordered by user id then item id.
pub fn write_edge_list<W: std::io::Write>(graph: &BipartiteGraph, mut sink: W) -> Result<()> {
    for (u, i) in graph.edges() {
        writeln!(sink, "{}\t{}", graph.user_tokens[u], graph.item_tokens[i])?;
    }
    sink.flush()?;
    Ok(())
}

/// Undirected bipartite interaction graph with binary edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    user_offsets: Vec<usize>,
    user_targets: Vec<usize>,
    item_offsets: Vec<usize>,
    item_targets: Vec<usize>,
    user_tokens: Vec<String>,
    item_tokens: Vec<String>,
}

/// Dense ids are assigned by first appearance, independently for users and
/// items. Duplicate pairs collapse to one edge.
pub fn build_graph(edges: &EdgeList) -> Result<BipartiteGraph> {
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut user_ids: HashMap<&str, usize> = HashMap::new();
    let mut item_ids: HashMap<&str, usize> = HashMap::new();
    let mut user_tokens = Vec::new();
    let mut item_tokens = Vec::new();
    let mut pairs = Vec::with_capacity(edges.len());
    for (u, i) in &edges.pairs {
        let uid = *user_ids.entry(u.as_str()).or_insert_with(|| {
            user_tokens.push(u.clone());
            user_tokens.len() - 1
        });
        let iid = *item_ids.entry(i.as_str()).or_insert_with(|| {
            item_tokens.push(i.clone());
            item_tokens.len() - 1
        });
        pairs.push((uid, iid));
    }
    BipartiteGraph::from_pairs(user_tokens, item_tokens, pairs)
}

impl BipartiteGraph {
    /// Builds from local id pairs. Every user and item must have at least one
    /// edge; duplicates are removed.
    pub fn from_pairs(
        user_tokens: Vec<String>,
        item_tokens: Vec<String>,
        mut pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let n_users = user_tokens.len();
        let n_items = item_tokens.len();
        if let Some(&(u, i)) = pairs.iter().find(|&&(u, i)| u >= n_users || i >= n_items) {
            return Err(Error::Validation(format!(
                "pair ({u}, {i}) out of range for {n_users} users and {n_items} items"
            )));
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut user_offsets = vec![0usize; n_users + 1];
        let mut item_offsets = vec![0usize; n_items + 1];
        for &(u, i) in &pairs {
            user_offsets[u + 1] += 1;
            item_offsets[i + 1] += 1;
        }
        for k in 0..n_users {
            user_offsets[k + 1] += user_offsets[k];
        }
        for k in 0..n_items {
            item_offsets[k + 1] += item_offsets[k];
        }
        if let Some(u) = (0..n_users).find(|&u| user_offsets[u] == user_offsets[u + 1]) {
            return Err(Error::Validation(format!("user {u} has no edges")));
        }
        if let Some(i) = (0..n_items).find(|&i| item_offsets[i] == item_offsets[i + 1]) {
            return Err(Error::Validation(format!("item {i} has no edges")));
        }

        // pairs are sorted by (user, item), so both halves come out ascending
        let user_targets: Vec<usize> = pairs.iter().map(|&(_, i)| i).collect();
        let mut item_targets = vec![0usize; pairs.len()];
        let mut cursor = item_offsets.clone();
        for &(u, i) in &pairs {
            item_targets[cursor[i]] = u;
            cursor[i] += 1;
        }

        Ok(Self {
            user_offsets,
            user_targets,
            item_offsets,
            item_targets,
            user_tokens,
            item_tokens,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_tokens.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_tokens.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_users() + self.n_items()
    }

    pub fn n_edges(&self) -> usize {
        self.user_targets.len()
    }

    /// Items adjacent to user `u`, ascending.
    pub fn user_adj(&self, u: usize) -> &[usize] {
        &self.user_targets[self.user_offsets[u]..self.user_offsets[u + 1]]
    }

    /// Users adjacent to item `i`, ascending.
    pub fn item_adj(&self, i: usize) -> &[usize] {
        &self.item_targets[self.item_offsets[i]..self.item_offsets[i + 1]]
    }

    pub fn user_degree(&self, u: usize) -> usize {
        self.user_offsets[u + 1] - self.user_offsets[u]
    }

    pub fn item_degree(&self, i: usize) -> usize {
        self.item_offsets[i + 1] - self.item_offsets[i]
    }

    pub fn is_user(&self, node: usize) -> bool {
        node < self.n_users()
    }

    pub fn item_node(&self, item: usize) -> usize {
        self.n_users() + item
    }

    /// Degree of a node in the joint index space.
    pub fn degree(&self, node: usize) -> usize {
        if self.is_user(node) {
            self.user_degree(node)
        } else {
            self.item_degree(node - self.n_users())
        }
    }

    pub fn has_edge(&self, u: usize, i: usize) -> bool {
        self.user_adj(u).binary_search(&i).is_ok()
    }

    /// All edges as (user, item), ordered by user then item.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_users()).flat_map(move |u| self.user_adj(u).iter().map(move |&i| (u, i)))
    }

    pub fn user_tokens(&self) -> &[String] {
        &self.user_tokens
    }

    pub fn item_tokens(&self) -> &[String] {
        &self.item_tokens
    }

    /// Connected component id per node in the joint index space.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let nu = self.n_users();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(x) = stack.pop() {
                let (adj, offset) = if x < nu {
                    (self.user_adj(x), nu)
                } else {
                    (self.item_adj(x - nu), 0)
                };
                for &y in adj {
                    let y = y + offset;
                    if comp[y] == usize::MAX {
                        comp[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tab_separated_pairs() {
        let edges = parse_edge_str("a\tx\nb\ty\n").unwrap();
        assert_eq!(
            edges.pairs,
            vec![("a".into(), "x".into()), ("b".into(), "y".into())]
        );
    }

    #[test]
    fn skips_comments() {
        let edges = parse_edge_str("# c\na\tx\n").unwrap();
        assert_eq!(edges.pairs, vec![("a".into(), "x".into())]);
    }

    #[test]
    fn rejects_space_separated_line() {
        match parse_edge_str("a x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_extra_fields_and_empty_tokens() {
        assert!(matches!(
            parse_edge_str("a\tx\nb\ty\tz\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_str("a\t\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn dedupes_edges() {
        let edges: EdgeList = [("a", "x"), ("a", "x"), ("b", "x")].into_iter().collect();
        let g = build_graph(&edges).unwrap();
        assert_eq!(g.n_users(), 2);
        assert_eq!(g.n_items(), 1);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.item_degree(0), 2);
    }

    #[test]
    fn disjoint_pairs_form_two_components() {
        let edges: EdgeList = [("a", "x"), ("b", "y")].into_iter().collect();
        let g = build_graph(&edges).unwrap();
        let comp = g.components();
        assert_eq!(comp[0], comp[2]);
        assert_eq!(comp[1], comp[3]);
        assert_ne!(comp[0], comp[1]);
    }

    #[test]
    fn empty_edge_list_rejected() {
        assert!(matches!(
            build_graph(&EdgeList::new()),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn ids_follow_first_appearance() {
        let edges: EdgeList = [("z", "q"), ("a", "p"), ("z", "p")].into_iter().collect();
        let g = build_graph(&edges).unwrap();
        assert_eq!(g.user_tokens(), ["z", "a"]);
        assert_eq!(g.item_tokens(), ["q", "p"]);
        assert_eq!(g.user_adj(0), &[0, 1]);
        assert_eq!(g.item_adj(1), &[0, 1]);
    }
}
