//! Balanced co-clustering of users and items on a bipartite interaction
//! graph, producing sketching assignments that map each ID to rows of a
//! compressed embedding codebook.
//!
//! The usual flow is [`graph::parse_edge_list`] → [`graph::build_graph`] →
//! [`pipeline::cluster`] → [`sketch::write_assignment`].

pub mod error;
pub mod graph;
pub mod metrics;
pub mod objective;
pub mod pipeline;
pub mod sketch;
pub mod solver;
pub mod synth;
pub mod weighting;

pub use error::{Error, Result};
pub use graph::{build_graph, parse_edge_list, BipartiteGraph, EdgeList};
pub use objective::Labeling;
pub use pipeline::{cluster, ClusterOutcome};
pub use sketch::{Codebook, ParamCount, SketchAssignment, SketchFile, SketchMeta};
pub use solver::{ClusterState, Move, NodeOrder, SolveReport, SolverConfig};
pub use weighting::{compute_weights, WeightScheme, WeightVector};
