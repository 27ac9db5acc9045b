//! Resolved troubleshooting graphs.
//!
//! A [`Tsg`] is built from a parsed document and a node registry. It keeps
//! the originating document in sync with every runtime edit so it can be
//! committed back to disk.

mod build;
mod dot;
mod edit;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

use crate::lang::{ConfigValue, TsgDocument};
use crate::nodes::{DECISION_CLASS, SUMMARY_CLASS, VIEW_CLASS};

pub use build::{build_graph, inferred_views};
pub use dot::export_dot;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("unknown node class '{0}'")]
    UnknownClass(String),
    #[error("unknown instance '{0}'")]
    UnknownInstance(String),
    #[error("duplicate instance name '{0}'")]
    DuplicateInstance(String),
    #[error("{kind} index {index} out of range for {node} ({class})")]
    PortOutOfRange {
        node: String,
        class: String,
        kind: &'static str,
        index: usize,
    },
    #[error("'-->' must end at a View; '{0}' is not one")]
    SelfLinkToNonView(String),
    #[error("node terminated: {0}")]
    NodeTerminated(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifecycleState {
    Created,
    Initialized,
    Running,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeInstance {
    pub id: String,
    pub class: String,
    /// 1-based config index to value.
    pub static_configs: BTreeMap<usize, ConfigValue>,
    pub state: LifecycleState,
    pub input_count: usize,
    pub output_count: usize,
}

impl NodeInstance {
    pub fn static_config(&self, index: usize) -> Option<&ConfigValue> {
        self.static_configs.get(&index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdgeSource {
    Output { node: String, index: usize },
    /// The node itself, linked into a View with `-->`.
    NodeSelf { node: String },
}

impl EdgeSource {
    pub fn node(&self) -> &str {
        match self {
            EdgeSource::Output { node, .. } | EdgeSource::NodeSelf { node } => node,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdgeTarget {
    Input { node: String, index: usize },
    /// 1-based config argument.
    Config { node: String, index: usize },
}

impl EdgeTarget {
    pub fn node(&self) -> &str {
        match self {
            EdgeTarget::Input { node, .. } | EdgeTarget::Config { node, .. } => node,
        }
    }

    fn order_key(&self) -> (usize, usize) {
        match self {
            EdgeTarget::Input { index, .. } => (0, *index),
            EdgeTarget::Config { index, .. } => (1, *index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub id: String,
    pub src: EdgeSource,
    pub dst: EdgeTarget,
    /// Buffer carried by the edge; `None` for node-self links.
    pub buffer: Option<String>,
}

/// Buffer identifier of a node output.
pub fn buffer_id(node: &str, output: usize) -> String {
    format!("{node}:{output}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViewGroup {
    pub view: String,
    /// Edge ids ordered by the View input they land on.
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tsg {
    pub nodes: IndexMap<String, NodeInstance>,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    pub origin: TsgDocument,
    pub revision: u64,
    next_edge: usize,
}

impl Tsg {
    pub fn empty(source_name: &str) -> Tsg {
        Tsg {
            nodes: IndexMap::new(),
            edges: Vec::new(),
            origin: TsgDocument::new(source_name),
            revision: 0,
            next_edge: 0,
        }
    }

    pub fn node(&self, id: &str) -> Option<&NodeInstance> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub(crate) fn push_edge(&mut self, src: EdgeSource, dst: EdgeTarget) -> &Edge {
        let id = format!("e{}", self.next_edge);
        self.next_edge += 1;
        let buffer = match &src {
            EdgeSource::Output { node, index } => Some(buffer_id(node, *index)),
            EdgeSource::NodeSelf { .. } => None,
        };
        self.edges.push(Edge {
            id,
            src,
            dst,
            buffer,
        });
        self.edges.last().unwrap()
    }

    /// Every node output, as buffer ids, in node order.
    pub fn output_buffers(&self) -> Vec<String> {
        self.nodes
            .values()
            .flat_map(|n| (0..n.output_count).map(move |i| buffer_id(&n.id, i)))
            .collect()
    }

    pub fn views(&self) -> Vec<ViewGroup> {
        self.nodes
            .values()
            .filter(|n| n.class == VIEW_CLASS)
            .map(|v| {
                let mut slots: Vec<&Edge> = self
                    .edges
                    .iter()
                    .filter(|e| e.dst.node() == v.id)
                    .collect();
                slots.sort_by_key(|e| e.dst.order_key());
                ViewGroup {
                    view: v.id.clone(),
                    slots: slots.into_iter().map(|e| e.id.clone()).collect(),
                }
            })
            .collect()
    }

    /// Edges leaving (forward) or entering (backward) a node, paired with the
    /// node on the other side. Ordered by port index, then creation order.
    pub fn neighbors(
        &self,
        id: &str,
        direction: Direction,
    ) -> Result<Vec<(&Edge, &NodeInstance)>, BuildError> {
        if !self.nodes.contains_key(id) {
            return Err(BuildError::UnknownInstance(id.to_string()));
        }
        let mut found: Vec<(usize, &Edge)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| match direction {
                Direction::Forward => e.src.node() == id,
                Direction::Backward => e.dst.node() == id,
            })
            .collect();
        found.sort_by_key(|(pos, e)| {
            let port = match direction {
                Direction::Forward => match &e.src {
                    EdgeSource::NodeSelf { .. } => (0, 0),
                    EdgeSource::Output { index, .. } => (1, *index),
                },
                Direction::Backward => e.dst.order_key(),
            };
            (port, *pos)
        });
        Ok(found
            .into_iter()
            .map(|(_, e)| {
                let other = match direction {
                    Direction::Forward => e.dst.node(),
                    Direction::Backward => e.src.node(),
                };
                (e, &self.nodes[other])
            })
            .collect())
    }

    /// Groups for navigation: "nodes", "outputs", "views" and "decisions".
    pub fn semantic_groups(&self) -> BTreeMap<String, Vec<String>> {
        let mut groups = BTreeMap::new();
        groups.insert("nodes".to_string(), self.nodes.keys().cloned().collect());
        groups.insert("outputs".to_string(), self.output_buffers());
        groups.insert(
            "views".to_string(),
            self.nodes
                .values()
                .filter(|n| n.class == VIEW_CLASS)
                .map(|n| n.id.clone())
                .collect(),
        );
        groups.insert(
            "decisions".to_string(),
            self.nodes
                .values()
                .filter(|n| n.class == DECISION_CLASS || n.class == SUMMARY_CLASS)
                .map(|n| n.id.clone())
                .collect(),
        );
        groups
    }

    /// Order-independent description used to compare graphs: node ids with
    /// class and configs, plus the multiset of links.
    pub fn shape(&self) -> (Vec<String>, Vec<String>) {
        let mut nodes: Vec<String> = self
            .nodes
            .values()
            .map(|n| format!("{} {} {:?}", n.id, n.class, n.static_configs))
            .collect();
        nodes.sort();
        let mut edges: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{:?} -> {:?}", e.src, e.dst))
            .collect();
        edges.sort();
        (nodes, edges)
    }
}
