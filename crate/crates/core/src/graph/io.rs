//! JSON graph documents.
//!
//! ```json
//! { "nodes": ["X0", "X1"], "edges": [{ "from": 0, "to": 1, "directed": false }] }
//! ```
//!
//! Endpoints are node indices. Undirected edges appear once with `from < to`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dag, GraphError, Pdag};
use crate::io::{write_atomic, IoError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphDocument {
    pub fn from_pdag(pdag: &Pdag, names: &[String]) -> Self {
        assert_eq!(names.len(), pdag.node_count(), "one name per node");
        let mut edges: Vec<EdgeRecord> = pdag
            .directed_edges()
            .map(|(from, to)| EdgeRecord {
                from,
                to,
                directed: true,
            })
            .chain(pdag.undirected_edges().map(|(from, to)| EdgeRecord {
                from,
                to,
                directed: false,
            }))
            .collect();
        edges.sort_by_key(|e| (e.from.min(e.to), e.from.max(e.to)));
        GraphDocument {
            nodes: names.to_vec(),
            edges,
        }
    }

    pub fn from_dag(dag: &Dag, names: &[String]) -> Self {
        Self::from_pdag(&Pdag::from_dag(dag), names)
    }

    pub fn to_pdag(&self) -> Result<Pdag, GraphError> {
        let mut g = Pdag::new(self.nodes.len())?;
        for e in &self.edges {
            if e.directed {
                g.add_directed(e.from, e.to)?;
            } else {
                g.add_undirected(e.from, e.to)?;
            }
        }
        Ok(g)
    }

    /// Fails on undirected edges or cycles.
    pub fn to_dag(&self) -> Result<Dag, GraphError> {
        let mut g = Dag::new(self.nodes.len())?;
        for e in &self.edges {
            if !e.directed {
                return Err(GraphError::UndirectedEdge(e.from, e.to));
            }
            g.add_edge(e.from, e.to)?;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
        serde_json::from_str(&text).map_err(|e| IoError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let mut text = self.to_json();
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Default names `X0, X1, …`.
pub fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("X{i}")).collect()
}
