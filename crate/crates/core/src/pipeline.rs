//! Solve and finalize in one call: weights, basic or complete solver, relabeling.

use crate::error::Result;
use crate::graph::BipartiteGraph;
use crate::metrics::{accl, cluster_sizes, gini, SizeScope};
use crate::sketch::{finalize, finalize_within_budget, SketchAssignment, SketchMeta};
use crate::solver::{run_basic, run_complete, ClusterState, SolveReport, SolverConfig};
use crate::weighting::{compute_weights, WeightVector};

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub weights: WeightVector,
    pub state: ClusterState,
    pub secondary: Option<Vec<usize>>,
    pub assignment: SketchAssignment,
    pub report: SolveReport,
    /// Rows by which `K_user + K_item` exceeds the budget the solver ran against.
    pub scu_overflow: usize,
    /// Secondary ids collapsed onto the primary id to stay within budget.
    pub scu_collapsed: usize,
}

impl ClusterOutcome {
    pub fn gini_user(&self) -> f64 {
        gini(&cluster_sizes(
            self.state.labels(),
            self.state.n_users(),
            SizeScope::Users,
        ))
        .unwrap_or(0.0)
    }

    pub fn gini_item(&self) -> f64 {
        gini(&cluster_sizes(
            self.state.labels(),
            self.state.n_users(),
            SizeScope::Items,
        ))
        .unwrap_or(0.0)
    }

    pub fn accl(&self, graph: &BipartiteGraph) -> f64 {
        accl(graph, self.state.labels())
    }
}

pub fn cluster(graph: &BipartiteGraph, config: &SolverConfig) -> Result<ClusterOutcome> {
    config.validate()?;
    let weights = compute_weights(graph, &config.scheme)?;
    let meta = SketchMeta {
        gamma: config.gamma,
        scheme: config.scheme.name().to_string(),
    };
    if config.scu {
        let (state, secondary, report) = run_complete(graph, &weights, config)?;
        let (assignment, collapsed) = if config.strict_budget {
            finalize_within_budget(&state, &secondary, meta, report.budget)
        } else {
            (finalize(&state, Some(&secondary), meta), 0)
        };
        let scu_overflow = (assignment.k_user + assignment.k_item).saturating_sub(report.budget);
        Ok(ClusterOutcome {
            weights,
            state,
            secondary: Some(secondary),
            assignment,
            report,
            scu_overflow,
            scu_collapsed: collapsed,
        })
    } else {
        let (state, report) = run_basic(graph, &weights, config)?;
        let assignment = finalize(&state, None, meta);
        Ok(ClusterOutcome {
            weights,
            state,
            secondary: None,
            assignment,
            report,
            scu_overflow: 0,
            scu_collapsed: 0,
        })
    }
}
