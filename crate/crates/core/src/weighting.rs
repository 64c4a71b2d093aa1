//! Per-node weights for the penalty term of the balanced objective.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// Degree-proportional users, uniform items.
    Hws,
    /// `d(x)/sqrt(|E|)` on both sides; recovers bipartite modularity.
    ModularityDegree,
    /// All weights one; recovers the Constant Potts Model.
    CpmUnit,
    /// Uniform users, degree-proportional items.
    ReverseHws,
    Custom {
        user: Vec<f64>,
        item: Vec<f64>,
    },
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Hws => "hws",
            WeightScheme::ModularityDegree => "modularity",
            WeightScheme::CpmUnit => "cpm-unit",
            WeightScheme::ReverseHws => "reverse-hws",
            WeightScheme::Custom { .. } => "custom",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hws" => Ok(WeightScheme::Hws),
            "modularity" => Ok(WeightScheme::ModularityDegree),
            "cpm-unit" => Ok(WeightScheme::CpmUnit),
            "reverse-hws" => Ok(WeightScheme::ReverseHws),
            other => Err(Error::Config(format!("unknown weight scheme '{other}'"))),
        }
    }
}

/// Frozen per-node weights with their per-side totals.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub w_user: Vec<f64>,
    pub w_item: Vec<f64>,
    pub total_user: f64,
    pub total_item: f64,
}

impl WeightVector {
    /// Weight of a node in the joint index space.
    pub fn node(&self, node: usize) -> f64 {
        let nu = self.w_user.len();
        if node < nu {
            self.w_user[node]
        } else {
            self.w_item[node - nu]
        }
    }

    pub fn total(&self) -> f64 {
        self.total_user + self.total_item
    }

    fn from_arrays(w_user: Vec<f64>, w_item: Vec<f64>) -> Self {
        let total_user = w_user.iter().sum();
        let total_item = w_item.iter().sum();
        Self {
            w_user,
            w_item,
            total_user,
            total_item,
        }
    }
}

pub fn compute_weights(graph: &BipartiteGraph, scheme: &WeightScheme) -> Result<WeightVector> {
    let nu = graph.n_users();
    let nv = graph.n_items();
    let sqrt_e = (graph.n_edges() as f64).sqrt();
    let user_deg = || {
        (0..nu)
            .map(|u| graph.user_degree(u) as f64 / sqrt_e)
            .collect::<Vec<_>>()
    };
    let item_deg = || {
        (0..nv)
            .map(|i| graph.item_degree(i) as f64 / sqrt_e)
            .collect::<Vec<_>>()
    };
    let weights = match scheme {
        WeightScheme::Hws => {
            WeightVector::from_arrays(user_deg(), vec![1.0 / (nv as f64).sqrt(); nv])
        }
        WeightScheme::ModularityDegree => WeightVector::from_arrays(user_deg(), item_deg()),
        WeightScheme::CpmUnit => WeightVector::from_arrays(vec![1.0; nu], vec![1.0; nv]),
        WeightScheme::ReverseHws => {
            WeightVector::from_arrays(vec![1.0 / (nu as f64).sqrt(); nu], item_deg())
        }
        WeightScheme::Custom { user, item } => {
            if user.len() != nu || item.len() != nv {
                return Err(Error::Validation(format!(
                    "custom weights have lengths {}/{}, graph has {nu} users and {nv} items",
                    user.len(),
                    item.len()
                )));
            }
            if let Some(w) = user
                .iter()
                .chain(item)
                .find(|w| !(**w > 0.0 && w.is_finite()))
            {
                return Err(Error::Validation(format!(
                    "custom weights must be finite and positive, found {w}"
                )));
            }
            WeightVector::from_arrays(user.clone(), item.clone())
        }
    };
    Ok(weights)
}
