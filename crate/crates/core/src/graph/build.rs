use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use indexmap::IndexMap;

use super::*;
use crate::lang::{Endpoint, EndpointTarget, LinkOp, NodeDecl, PortKind, PortRef, Statement};
use crate::nodes::{NodeClassSpec, NodeRegistry};

/// Instance ids for every declaration, in [`TsgDocument::decls`] order.
/// Anonymous declarations get `Class-N` from a per-class counter that skips
/// names already declared in the document.
pub(crate) fn assign_ids(doc: &TsgDocument) -> Vec<String> {
    let decls = doc.decls();
    let declared: HashSet<&str> = decls.iter().filter_map(|d| d.name.as_deref()).collect();
    let mut counters: HashMap<&str, usize> = HashMap::new();
    decls
        .iter()
        .map(|d| match &d.name {
            Some(n) => n.clone(),
            None => {
                let next = counters.entry(d.class.as_str()).or_insert(1);
                loop {
                    let candidate = format!("{}-{}", d.class, *next);
                    *next += 1;
                    if !declared.contains(candidate.as_str()) {
                        break candidate;
                    }
                }
            }
        })
        .collect()
}

/// Names referenced on the right of a link operator without ever being
/// declared; these resolve to Views.
pub fn inferred_views(doc: &TsgDocument) -> Vec<String> {
    let declared: HashSet<String> = doc.decls().iter().filter_map(|d| d.name.clone()).collect();
    let mut views = Vec::new();
    for stmt in &doc.statements {
        if let Statement::Chain(chain) = stmt {
            for (_, _, right) in chain.links() {
                if let EndpointTarget::Name(n) = &right.target {
                    if !declared.contains(n) && !views.contains(n) {
                        views.push(n.clone());
                    }
                }
            }
        }
    }
    views
}

pub(crate) fn new_instance(id: &str, decl: Option<&NodeDecl>, spec: &NodeClassSpec) -> NodeInstance {
    let static_configs: BTreeMap<usize, ConfigValue> = decl
        .map(|d| {
            d.args
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1, v.clone()))
                .collect()
        })
        .unwrap_or_default();
    NodeInstance {
        id: id.to_string(),
        class: spec.class_name.clone(),
        static_configs,
        state: LifecycleState::Created,
        input_count: spec.inputs.len(),
        output_count: spec.outputs.len(),
    }
}

/// Range check for a single port; grows the counts of variadic classes.
pub(crate) fn claim_port(
    node: &mut NodeInstance,
    spec: &NodeClassSpec,
    port: PortRef,
) -> Result<(), BuildError> {
    let ok = match port.kind {
        PortKind::Output => spec.accepts_output(port.index),
        PortKind::Input => spec.accepts_input(port.index),
        PortKind::Config => spec.accepts_config(port.index),
    };
    if !ok {
        return Err(BuildError::PortOutOfRange {
            node: node.id.clone(),
            class: node.class.clone(),
            kind: match port.kind {
                PortKind::Output => "output",
                PortKind::Input => "input",
                PortKind::Config => "config",
            },
            index: port.index,
        });
    }
    match port.kind {
        PortKind::Output => node.output_count = node.output_count.max(port.index + 1),
        PortKind::Input => node.input_count = node.input_count.max(port.index + 1),
        PortKind::Config => {}
    }
    Ok(())
}

struct Builder<'a> {
    registry: &'a NodeRegistry,
    nodes: IndexMap<String, NodeInstance>,
    ids: Vec<String>,
    declared: HashSet<String>,
    views: Vec<String>,
}

/// Resolves a document into a graph.
pub fn build_graph(doc: &TsgDocument, registry: &NodeRegistry) -> Result<Tsg, BuildError> {
    let ids = assign_ids(doc);
    let mut declared = HashSet::new();
    for d in doc.decls() {
        if let Some(n) = &d.name {
            if !declared.insert(n.clone()) {
                return Err(BuildError::DuplicateInstance(n.clone()));
            }
        }
    }
    let mut b = Builder {
        registry,
        nodes: IndexMap::new(),
        ids,
        declared,
        views: inferred_views(doc),
    };

    // Pass 1: instances in order of first appearance.
    let mut next_decl = 0;
    for stmt in &doc.statements {
        match stmt {
            Statement::Decl(d) => b.declare(d, &mut next_decl)?,
            Statement::Chain(chain) => {
                for ep in &chain.endpoints {
                    match &ep.target {
                        EndpointTarget::Decl(d) => b.declare(d, &mut next_decl)?,
                        EndpointTarget::Name(n) => b.reference(n)?,
                    }
                }
            }
        }
    }

    // Pass 2: edges.
    let mut tsg = Tsg::empty(&doc.source_name);
    tsg.origin = doc.clone();
    let mut next_decl = 0;
    for stmt in &doc.statements {
        match stmt {
            Statement::Decl(_) => next_decl += 1,
            Statement::Chain(chain) => {
                let resolved: Vec<String> = chain
                    .endpoints
                    .iter()
                    .map(|ep| match &ep.target {
                        EndpointTarget::Decl(_) => {
                            next_decl += 1;
                            b.ids[next_decl - 1].clone()
                        }
                        EndpointTarget::Name(n) => n.clone(),
                    })
                    .collect();
                for (i, (left_ep, op, right_ep)) in chain.links().enumerate() {
                    b.link(&mut tsg, &resolved[i], left_ep, op, &resolved[i + 1], right_ep)?;
                }
            }
        }
    }
    tsg.nodes = b.nodes;
    Ok(tsg)
}

impl Builder<'_> {
    fn spec(&self, class: &str) -> Result<Arc<NodeClassSpec>, BuildError> {
        self.registry
            .get(class)
            .cloned()
            .ok_or_else(|| BuildError::UnknownClass(class.to_string()))
    }

    fn declare(&mut self, d: &NodeDecl, next_decl: &mut usize) -> Result<(), BuildError> {
        let id = self.ids[*next_decl].clone();
        *next_decl += 1;
        let spec = self.spec(&d.class)?;
        self.nodes.insert(id.clone(), new_instance(&id, Some(d), &spec));
        Ok(())
    }

    fn reference(&mut self, name: &str) -> Result<(), BuildError> {
        if self.declared.contains(name) || self.nodes.contains_key(name) {
            return Ok(());
        }
        if !self.views.iter().any(|v| v == name) {
            return Err(BuildError::UnknownInstance(name.to_string()));
        }
        let spec = self.spec(VIEW_CLASS)?;
        self.nodes.insert(name.to_string(), new_instance(name, None, &spec));
        Ok(())
    }

    fn claim(&mut self, id: &str, port: PortRef) -> Result<(), BuildError> {
        let class = self.nodes[id].class.clone();
        let spec = self.spec(&class)?;
        claim_port(self.nodes.get_mut(id).unwrap(), &spec, port)
    }

    fn link(
        &mut self,
        tsg: &mut Tsg,
        left: &str,
        left_ep: &Endpoint,
        op: LinkOp,
        right: &str,
        right_ep: &Endpoint,
    ) -> Result<(), BuildError> {
        let right_ports = right_ep.effective_inputs();
        if op == LinkOp::SelfLink {
            if self.nodes[right].class != VIEW_CLASS {
                return Err(BuildError::SelfLinkToNonView(right.to_string()));
            }
            for p in right_ports {
                if p.kind == PortKind::Config {
                    return Err(BuildError::SelfLinkToNonView(right.to_string()));
                }
                self.claim(right, p)?;
                tsg.push_edge(
                    EdgeSource::NodeSelf {
                        node: left.to_string(),
                    },
                    EdgeTarget::Input {
                        node: right.to_string(),
                        index: p.index,
                    },
                );
            }
            return Ok(());
        }
        for (out, inp) in left_ep.effective_outputs().into_iter().zip(right_ports) {
            self.claim(left, out)?;
            self.claim(right, inp)?;
            let dst = match inp.kind {
                PortKind::Config => EdgeTarget::Config {
                    node: right.to_string(),
                    index: inp.index,
                },
                _ => EdgeTarget::Input {
                    node: right.to_string(),
                    index: inp.index,
                },
            };
            tsg.push_edge(
                EdgeSource::Output {
                    node: left.to_string(),
                    index: out.index,
                },
                dst,
            );
        }
        Ok(())
    }
}
