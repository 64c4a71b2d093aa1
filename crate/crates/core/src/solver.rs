//! Greedy label-propagation solver for the balanced objective.
//!
//! Every node starts in its own cluster and repeatedly adopts the candidate
//! label (its own or a neighbor's) of highest likelihood:
//!
//! ```text
//! user i:  p(k) = |N(i) with label k| - gamma * w_u[i] * S_item(k)
//! item j:  p(k) = |N(j) with label k| - gamma * w_v[j] * S_user(k)
//! ```
//!
//! `S_item(k)` / `S_user(k)` are the item / user weight sums of cluster `k`,
//! maintained incrementally so each candidate costs O(1). A node never
//! contributes to its own penalty term, so an accepted move changes the
//! pair-sum objective by exactly `p(new) - p(old)`.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::objective::objective_pairsum;
use crate::weighting::{WeightScheme, WeightVector};

pub const DEFAULT_MAX_ITERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeOrder {
    /// Users `0..n` then items `0..m`, every sweep.
    #[default]
    ByIndex,
    /// A fresh permutation of all nodes each sweep, seeded.
    ShuffledEachIter(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    /// Target for `K_user + K_item`.
    pub budget: usize,
    /// Embedding dimension; required with `scu`.
    pub dim: Option<usize>,
    pub max_iters: usize,
    pub scheme: WeightScheme,
    pub scu: bool,
    pub order: NodeOrder,
    pub scu_distinct: bool,
    pub strict_budget: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64, budget: usize) -> Self {
        Self {
            gamma,
            budget,
            dim: None,
            max_iters: DEFAULT_MAX_ITERS,
            scheme: WeightScheme::Hws,
            scu: false,
            order: NodeOrder::ByIndex,
            scu_distinct: false,
            strict_budget: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.dim == Some(0) {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.scu && self.dim.is_none() {
            return Err(Error::Config("secondary user clusters require dim".into()));
        }
        Ok(())
    }

    /// Codebook budget left after charging one slot per user for the
    /// secondary index: `floor((B*d - |U|) / d)`.
    pub fn reduced_budget(&self, n_users: usize) -> Result<usize> {
        let dim = self
            .dim
            .ok_or_else(|| Error::Config("secondary user clusters require dim".into()))?;
        reduced_budget(self.budget, dim, n_users)
    }
}

pub fn reduced_budget(budget: usize, dim: usize, n_users: usize) -> Result<usize> {
    let bytes = budget
        .checked_mul(dim)
        .ok_or_else(|| Error::Config("budget * dim overflows".into()))?;
    if bytes <= n_users {
        return Err(Error::Config(format!(
            "budget * dim = {bytes} does not exceed {n_users} users"
        )));
    }
    let reduced = (bytes - n_users) / dim;
    if reduced < 2 {
        return Err(Error::Config(format!(
            "reduced budget {reduced} is below 2 (one user and one item cluster)"
        )));
    }
    Ok(reduced)
}

/// Neighbor-label tally for one node scan.
#[derive(Debug, Clone, Default)]
struct Scratch {
    counts: Vec<u32>,
    touched: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            counts: vec![0; n],
            touched: Vec::new(),
        }
    }

    fn tally(&mut self, graph: &BipartiteGraph, labels: &[usize], node: usize) {
        self.clear();
        let nu = graph.n_users();
        let (adj, offset) = if node < nu {
            (graph.user_adj(node), nu)
        } else {
            (graph.item_adj(node - nu), 0)
        };
        for &y in adj {
            let l = labels[y + offset];
            if self.counts[l] == 0 {
                self.touched.push(l);
            }
            self.counts[l] += 1;
        }
    }

    fn clear(&mut self) {
        for &l in &self.touched {
            self.counts[l] = 0;
        }
        self.touched.clear();
    }
}

/// Labels plus per-cluster aggregates. Raw labels index flat arrays, so they
/// are bounded by the node count.
#[derive(Debug, Clone)]
pub struct ClusterState {
    labels: Vec<usize>,
    n_users: usize,
    sum_user_weight: Vec<f64>,
    sum_item_weight: Vec<f64>,
    user_members: Vec<usize>,
    item_members: Vec<usize>,
    k_user: usize,
    k_item: usize,
    k_joint: usize,
    scratch: Scratch,
}

impl ClusterState {
    /// Unique initial labels: user `i` gets `i`, item `j` gets `n_users + j`.
    pub fn new(graph: &BipartiteGraph, weights: &WeightVector) -> Self {
        Self::from_labels(graph, weights, (0..graph.n_nodes()).collect())
            .expect("identity labeling is always valid")
    }

    pub fn from_labels(
        graph: &BipartiteGraph,
        weights: &WeightVector,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let n = graph.n_nodes();
        check_weights(graph, weights)?;
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "labeling has {} entries, graph has {n} nodes",
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n) {
            return Err(Error::Validation(format!(
                "label {l} exceeds node count {n}"
            )));
        }
        let nu = graph.n_users();
        let mut state = Self {
            labels,
            n_users: nu,
            sum_user_weight: vec![0.0; n],
            sum_item_weight: vec![0.0; n],
            user_members: vec![0; n],
            item_members: vec![0; n],
            k_user: 0,
            k_item: 0,
            k_joint: 0,
            scratch: Scratch::new(n),
        };
        for node in 0..n {
            let l = state.labels[node];
            if state.user_members[l] + state.item_members[l] == 0 {
                state.k_joint += 1;
            }
            if node < nu {
                if state.user_members[l] == 0 {
                    state.k_user += 1;
                }
                state.user_members[l] += 1;
                state.sum_user_weight[l] += weights.w_user[node];
            } else {
                if state.item_members[l] == 0 {
                    state.k_item += 1;
                }
                state.item_members[l] += 1;
                state.sum_item_weight[l] += weights.w_item[node - nu];
            }
        }
        Ok(state)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn user_labels(&self) -> &[usize] {
        &self.labels[..self.n_users]
    }

    pub fn item_labels(&self) -> &[usize] {
        &self.labels[self.n_users..]
    }

    pub fn sum_user_weight(&self, label: usize) -> f64 {
        self.sum_user_weight[label]
    }

    pub fn sum_item_weight(&self, label: usize) -> f64 {
        self.sum_item_weight[label]
    }

    /// Distinct labels among users.
    pub fn k_user(&self) -> usize {
        self.k_user
    }

    /// Distinct labels among items.
    pub fn k_item(&self) -> usize {
        self.k_item
    }

    /// Distinct labels over all nodes.
    pub fn k_joint(&self) -> usize {
        self.k_joint
    }

    /// Likelihood of `label` for `node` given how many of its neighbors carry it.
    pub fn likelihood(
        &self,
        weights: &WeightVector,
        gamma: f64,
        node: usize,
        label: usize,
        neighbors_in_label: usize,
    ) -> f64 {
        assert!(
            label < self.labels.len(),
            "label {label} outside the label space"
        );
        let penalty = if node < self.n_users {
            weights.w_user[node] * self.sum_item_weight[label]
        } else {
            weights.w_item[node - self.n_users] * self.sum_user_weight[label]
        };
        neighbors_in_label as f64 - gamma * penalty
    }

    /// Argmax over the candidate set already tallied in `scratch`. Ties prefer
    /// the current label, then the smallest label. With `exclude_own`, the
    /// current label is dropped from the candidates unless it is the only one.
    fn best_candidate(
        &self,
        scratch: &Scratch,
        weights: &WeightVector,
        gamma: f64,
        node: usize,
        exclude_own: bool,
    ) -> (usize, f64) {
        let own = self.labels[node];
        let p = |l: usize| self.likelihood(weights, gamma, node, l, scratch.counts[l] as usize);
        let mut best: Option<(usize, f64)> = if exclude_own {
            None
        } else {
            Some((own, p(own)))
        };
        for &l in &scratch.touched {
            if l == own {
                continue;
            }
            let pl = p(l);
            best = match best {
                None => Some((l, pl)),
                Some((bl, bp)) => {
                    if pl > bp || (pl == bp && bl != own && l < bl) {
                        Some((l, pl))
                    } else {
                        Some((bl, bp))
                    }
                }
            };
        }
        best.unwrap_or_else(|| (own, p(own)))
    }

    fn relabel(&mut self, weights: &WeightVector, node: usize, to: usize) {
        let from = self.labels[node];
        if from == to {
            return;
        }
        if self.user_members[to] + self.item_members[to] == 0 {
            self.k_joint += 1;
        }
        if node < self.n_users {
            let w = weights.w_user[node];
            self.user_members[from] -= 1;
            if self.user_members[from] == 0 {
                self.k_user -= 1;
                self.sum_user_weight[from] = 0.0;
            } else {
                self.sum_user_weight[from] -= w;
            }
            if self.user_members[to] == 0 {
                self.k_user += 1;
            }
            self.user_members[to] += 1;
            self.sum_user_weight[to] += w;
        } else {
            let w = weights.w_item[node - self.n_users];
            self.item_members[from] -= 1;
            if self.item_members[from] == 0 {
                self.k_item -= 1;
                self.sum_item_weight[from] = 0.0;
            } else {
                self.sum_item_weight[from] -= w;
            }
            if self.item_members[to] == 0 {
                self.k_item += 1;
            }
            self.item_members[to] += 1;
            self.sum_item_weight[to] += w;
        }
        if self.user_members[from] + self.item_members[from] == 0 {
            self.k_joint -= 1;
        }
        self.labels[node] = to;
    }

    /// Moves `node` to its best candidate label. Returns the move when the
    /// label changed.
    fn step(
        &mut self,
        graph: &BipartiteGraph,
        weights: &WeightVector,
        gamma: f64,
        node: usize,
    ) -> Option<Move> {
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.tally(graph, &self.labels, node);
        let from = self.labels[node];
        let p_from = self.likelihood(weights, gamma, node, from, scratch.counts[from] as usize);
        let (to, p_to) = self.best_candidate(&scratch, weights, gamma, node, false);
        scratch.clear();
        self.scratch = scratch;
        if to == from {
            return None;
        }
        self.relabel(weights, node, to);
        Some(Move {
            node,
            from,
            to,
            p_from,
            p_to,
        })
    }

    /// Applies one greedy update to `node`; returns whether its label changed.
    pub fn update_node(
        &mut self,
        graph: &BipartiteGraph,
        weights: &WeightVector,
        gamma: f64,
        node: usize,
    ) -> bool {
        self.step(graph, weights, gamma, node).is_some()
    }

    /// Brute-force recomputation of every aggregate, compared at `tol`.
    pub fn aggregates_consistent(&self, weights: &WeightVector, tol: f64) -> bool {
        let n = self.labels.len();
        let mut su = vec![0.0f64; n];
        let mut sv = vec![0.0f64; n];
        let mut mu = vec![0usize; n];
        let mut mv = vec![0usize; n];
        for (node, &l) in self.labels.iter().enumerate() {
            if node < self.n_users {
                su[l] += weights.w_user[node];
                mu[l] += 1;
            } else {
                sv[l] += weights.w_item[node - self.n_users];
                mv[l] += 1;
            }
        }
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        let k_user = mu.iter().filter(|&&c| c > 0).count();
        let k_item = mv.iter().filter(|&&c| c > 0).count();
        let k_joint = (0..n).filter(|&l| mu[l] + mv[l] > 0).count();
        k_user == self.k_user
            && k_item == self.k_item
            && k_joint == self.k_joint
            && mu == self.user_members
            && mv == self.item_members
            && (0..n).all(|l| {
                close(su[l], self.sum_user_weight[l]) && close(sv[l], self.sum_item_weight[l])
            })
    }
}

fn check_weights(graph: &BipartiteGraph, weights: &WeightVector) -> Result<()> {
    if weights.w_user.len() != graph.n_users() || weights.w_item.len() != graph.n_items() {
        return Err(Error::Validation(format!(
            "weights cover {}/{} nodes, graph has {}/{}",
            weights.w_user.len(),
            weights.w_item.len(),
            graph.n_users(),
            graph.n_items()
        )));
    }
    Ok(())
}

/// Accepted label change, with likelihoods evaluated just before the move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub node: usize,
    pub from: usize,
    pub to: usize,
    pub p_from: f64,
    pub p_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations_run: usize,
    pub converged_no_moves: bool,
    pub budget_met: bool,
    /// Budget the loop ran against (the reduced one for complete runs).
    pub budget: usize,
    pub final_k_user: usize,
    pub final_k_item: usize,
    pub objective_value: f64,
    pub wall_time: Duration,
}

/// Basic solver against `config.budget`.
pub fn run_basic(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    config: &SolverConfig,
) -> Result<(ClusterState, SolveReport)> {
    run_basic_observed(graph, weights, config, |_, _| {})
}

/// Like [`run_basic`], calling `observer` after every accepted move.
pub fn run_basic_observed<F>(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    config: &SolverConfig,
    observer: F,
) -> Result<(ClusterState, SolveReport)>
where
    F: FnMut(&Move, &ClusterState),
{
    config.validate()?;
    run_against_budget(graph, weights, config, config.budget, observer)
}

fn run_against_budget<F>(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    config: &SolverConfig,
    budget: usize,
    mut observer: F,
) -> Result<(ClusterState, SolveReport)>
where
    F: FnMut(&Move, &ClusterState),
{
    let start = Instant::now();
    let mut state = ClusterState::new(graph, weights);
    let n = graph.n_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = match config.order {
        NodeOrder::ShuffledEachIter(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        NodeOrder::ByIndex => None,
    };

    let mut iterations = 0;
    let mut converged = false;
    while state.k_user + state.k_item > budget && iterations < config.max_iters {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut moves = 0usize;
        for &node in &order {
            if let Some(mv) = state.step(graph, weights, config.gamma, node) {
                moves += 1;
                observer(&mv, &state);
            }
        }
        iterations += 1;
        if moves == 0 {
            converged = true;
            break;
        }
    }

    let budget_met = state.k_user + state.k_item <= budget;
    if config.strict_budget && !budget_met {
        return Err(Error::BudgetNotMet {
            k_user: state.k_user,
            k_item: state.k_item,
            budget,
        });
    }
    let objective_value = objective_pairsum(graph, weights, &state.labels, config.gamma)?;
    let report = SolveReport {
        iterations_run: iterations,
        converged_no_moves: converged,
        budget_met,
        budget,
        final_k_user: state.k_user,
        final_k_item: state.k_item,
        objective_value,
        wall_time: start.elapsed(),
    };
    Ok((state, report))
}

/// One extra argmax per user over the frozen final state. Primary labels are
/// left untouched. With `distinct`, the user's primary label is excluded
/// whenever another candidate exists.
pub fn secondary_pass(
    state: &ClusterState,
    graph: &BipartiteGraph,
    weights: &WeightVector,
    gamma: f64,
    distinct: bool,
) -> Vec<usize> {
    let mut scratch = Scratch::new(graph.n_nodes());
    (0..graph.n_users())
        .map(|u| {
            scratch.tally(graph, &state.labels, u);
            let (label, _) = state.best_candidate(&scratch, weights, gamma, u, distinct);
            label
        })
        .collect()
}

/// Complete solver: runs against the reduced budget, then assigns each user
/// a secondary cluster.
pub fn run_complete(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    config: &SolverConfig,
) -> Result<(ClusterState, Vec<usize>, SolveReport)> {
    run_complete_observed(graph, weights, config, |_, _| {})
}

pub fn run_complete_observed<F>(
    graph: &BipartiteGraph,
    weights: &WeightVector,
    config: &SolverConfig,
    observer: F,
) -> Result<(ClusterState, Vec<usize>, SolveReport)>
where
    F: FnMut(&Move, &ClusterState),
{
    config.validate()?;
    if !config.scu {
        return Err(Error::Config("complete run requires scu".into()));
    }
    let budget = config.reduced_budget(graph.n_users())?;
    let start = Instant::now();
    let (state, mut report) = run_against_budget(graph, weights, config, budget, observer)?;
    let secondary = secondary_pass(&state, graph, weights, config.gamma, config.scu_distinct);
    report.wall_time = start.elapsed();
    Ok((state, secondary, report))
}
