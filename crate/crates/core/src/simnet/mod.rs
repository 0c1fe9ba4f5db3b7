//! Deterministic network simulator: a static topology, internally
//! vertex-disjoint routes between two nodes, one packet per route, and an
//! adversary that sits on some of the routes.

mod deliver;
mod experiment;
mod paths;

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::PipelineError;

pub use deliver::{deliver, AdversaryModel, Arrival, Behavior, Delivery, Disposition};
pub use experiment::{run_experiment, write_csv, ExperimentConfig, ExperimentReport, PhaseTimes, Summary, TrialRow};
pub use paths::{disjoint_paths, max_disjoint_paths, Path};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("topology is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("node {0:?} is not in the topology")]
    NodeNotFound(String),
    #[error("source and destination are both {0:?}")]
    SameEndpoints(String),
    #[error("only {available} disjoint paths exist, {requested} requested")]
    NotEnoughPaths { requested: usize, available: usize },
    #[error("{packets} packets for {paths} paths")]
    ArityMismatch { paths: usize, packets: usize },
    #[error("compromised path {index} is not one of the {paths} chosen paths")]
    CompromisedOutOfRange { index: usize, paths: usize },
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
}

/// An undirected simple graph with a latency in milliseconds on each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    names: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
}

impl Topology {
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S, f64)]) -> Result<Self, SimError> {
        let names: Vec<String> = nodes.iter().map(|n| n.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(SimError::Topology(format!("duplicate node {name:?}")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| SimError::Topology(format!("edge endpoint {name:?} is not a node")))
        };
        let mut adj = vec![Vec::new(); names.len()];
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (a, b, latency) in edges {
            let (u, v) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if u == v {
                return Err(SimError::Topology(format!("self-loop at {:?}", names[u])));
            }
            if !latency.is_finite() || *latency < 0.0 {
                return Err(SimError::Topology(format!(
                    "edge {:?}-{:?} has latency {latency}",
                    names[u], names[v]
                )));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(SimError::Topology(format!(
                    "duplicate edge {:?}-{:?}",
                    names[u], names[v]
                )));
            }
            adj[u].push((v, *latency));
            adj[v].push((u, *latency));
            out.push((u, v, *latency));
        }
        Ok(Self {
            names,
            index,
            adj,
            edges: out,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let file: TopologyFile = serde_json::from_str(text)?;
        Self::new(&file.nodes, &file.edges)
    }

    pub fn to_json(&self) -> String {
        let file = TopologyFile {
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v, l)| (self.names[u].clone(), self.names[v].clone(), l))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("topology serializes")
    }

    /// The complete graph on `n` nodes named `n0..`, every edge `latency` ms.
    pub fn complete(n: usize, latency: f64) -> Self {
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((nodes[i].clone(), nodes[j].clone(), latency));
            }
        }
        Self::new(&nodes, &edges).expect("complete graph is simple")
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn node(&self, name: &str) -> Result<usize, SimError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| SimError::NodeNotFound(name.to_string()))
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }

    /// Edges as `(u, v, latency_ms)` in file order.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn latency(&self, u: usize, v: usize) -> Option<f64> {
        self.adj[u].iter().find(|(w, _)| *w == v).map(|&(_, l)| l)
    }

    pub fn is_connected(&self) -> bool {
        if self.names.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
