use super::build::{assign_ids, claim_port};
use super::*;
use crate::lang::{Endpoint, LinkChain, LinkOp, PortKind, PortRef, SourceSpan, Statement};
use crate::nodes::NodeRegistry;

impl Tsg {
    /// Declaration of `id` in the origin document, named after the instance
    /// when it was anonymous so later statements can refer to it.
    fn origin_decl(&mut self, id: &str) -> Option<&mut crate::lang::NodeDecl> {
        let ids = assign_ids(&self.origin);
        let pos = ids.iter().position(|i| i == id)?;
        let decl = self.origin.decls_mut().into_iter().nth(pos)?;
        if decl.name.is_none() {
            decl.name = Some(id.to_string());
        }
        Some(decl)
    }

    fn live_node(&self, id: &str) -> Result<&NodeInstance, BuildError> {
        let node = self
            .nodes
            .get(id)
            .ok_or_else(|| BuildError::UnknownInstance(id.to_string()))?;
        if node.state == LifecycleState::Terminated {
            return Err(BuildError::NodeTerminated(id.to_string()));
        }
        Ok(node)
    }

    /// Adds a link at runtime and appends the matching statement to the
    /// origin document.
    pub fn add_edge(
        &mut self,
        registry: &NodeRegistry,
        src: EdgeSource,
        dst: EdgeTarget,
    ) -> Result<Edge, BuildError> {
        let src_node = self.live_node(src.node())?.clone();
        let dst_node = self.live_node(dst.node())?.clone();
        let spec_of = |class: &str| {
            registry
                .get(class)
                .cloned()
                .ok_or_else(|| BuildError::UnknownClass(class.to_string()))
        };
        let src_spec = spec_of(&src_node.class)?;
        let dst_spec = spec_of(&dst_node.class)?;

        let dst_port = match &dst {
            EdgeTarget::Input { index, .. } => PortRef::input(*index),
            EdgeTarget::Config { index, .. } => PortRef::config(*index),
        };
        let mut src_updated = src_node.clone();
        let mut dst_updated = dst_node.clone();
        let (op, src_ports) = match &src {
            EdgeSource::Output { index, .. } => {
                claim_port(&mut src_updated, &src_spec, PortRef::output(*index))?;
                (LinkOp::Link, Some(vec![PortRef::output(*index)]))
            }
            EdgeSource::NodeSelf { .. } => {
                if dst_node.class != VIEW_CLASS || dst_port.kind == PortKind::Config {
                    return Err(BuildError::SelfLinkToNonView(dst.node().to_string()));
                }
                (LinkOp::SelfLink, None)
            }
        };
        if src.node() == dst.node() {
            claim_port(&mut src_updated, &dst_spec, dst_port)?;
            dst_updated = src_updated.clone();
        } else {
            claim_port(&mut dst_updated, &dst_spec, dst_port)?;
        }

        self.origin_decl(src.node());
        self.origin_decl(dst.node());
        let mut left = Endpoint::named(src.node());
        left.outputs = src_ports;
        let mut right = Endpoint::named(dst.node());
        right.inputs = Some(vec![dst_port]);
        self.origin.statements.push(Statement::Chain(LinkChain {
            endpoints: vec![left, right],
            ops: vec![op],
            span: SourceSpan::default(),
        }));

        self.nodes.insert(src_updated.id.clone(), src_updated);
        self.nodes.insert(dst_updated.id.clone(), dst_updated);
        let edge = self.push_edge(src, dst).clone();
        self.revision += 1;
        Ok(edge)
    }

    /// Replaces a static configuration argument (1-based index) in the graph
    /// and in the origin document.
    pub fn set_config_value(
        &mut self,
        registry: &NodeRegistry,
        id: &str,
        index: usize,
        value: ConfigValue,
    ) -> Result<(), BuildError> {
        let node = self.live_node(id)?;
        let spec = registry
            .get(&node.class)
            .ok_or_else(|| BuildError::UnknownClass(node.class.clone()))?;
        if !spec.accepts_config(index) {
            return Err(BuildError::PortOutOfRange {
                node: id.to_string(),
                class: node.class.clone(),
                kind: "config",
                index,
            });
        }
        let decl = self
            .origin_decl(id)
            .ok_or_else(|| BuildError::UnknownInstance(id.to_string()))?;
        while decl.args.len() < index {
            decl.args.push(ConfigValue::Nil);
        }
        decl.args[index - 1] = value.clone();
        let node = self.nodes.get_mut(id).expect("checked above");
        for i in 1..index {
            node.static_configs.entry(i).or_insert(ConfigValue::Nil);
        }
        node.static_configs.insert(index, value);
        self.revision += 1;
        Ok(())
    }

    pub fn set_state(&mut self, id: &str, state: LifecycleState) {
        if let Some(n) = self.nodes.get_mut(id) {
            n.state = state;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::lang::{parse_document, serialize_document};

    fn graph(text: &str) -> Tsg {
        build_graph(&parse_document(text, "t").unwrap(), &NodeRegistry::builtin()).unwrap()
    }

    #[test]
    fn added_edge_lands_in_the_document() {
        let reg = NodeRegistry::builtin();
        let mut g = graph("ping :: Ping(localhost, 10.0.0.1);\nifconfig :: Ifconfig(localhost);");
        let e = g
            .add_edge(
                &reg,
                EdgeSource::Output { node: "ping".into(), index: 0 },
                EdgeTarget::Input { node: "ifconfig".into(), index: 0 },
            )
            .unwrap();
        assert_eq!(e.buffer.as_deref(), Some("ping:0"));
        assert_eq!(g.revision, 1);
        let text = serialize_document(&g.origin);
        assert!(text.ends_with("ping[0] -> [0]ifconfig;\n"), "{text}");
        let again = build_graph(&parse_document(&text, "t").unwrap(), &reg).unwrap();
        assert_eq!(again.shape(), g.shape());
    }

    #[test]
    fn anonymous_instances_get_named_in_the_document() {
        let reg = NodeRegistry::builtin();
        let mut g = graph("Clock(5) -> Graph();");
        g.add_edge(
            &reg,
            EdgeSource::NodeSelf { node: "Graph-1".into() },
            EdgeTarget::Input { node: "Graph-1".into(), index: 0 },
        )
        .unwrap_err();
        g.set_config_value(&reg, "Clock-1", 1, ConfigValue::Int(2)).unwrap();
        let text = serialize_document(&g.origin);
        assert_eq!(text, "Clock-1 :: Clock(2) -> Graph();\n");
        let again = build_graph(&parse_document(&text, "t").unwrap(), &reg).unwrap();
        assert_eq!(again.shape(), g.shape());
    }

    #[test]
    fn config_edits_are_checked() {
        let reg = NodeRegistry::builtin();
        let mut g = graph("p :: Ping(localhost, 10.0.0.1);");
        assert!(matches!(
            g.set_config_value(&reg, "p", 0, ConfigValue::Nil),
            Err(BuildError::PortOutOfRange { .. })
        ));
        assert!(matches!(
            g.set_config_value(&reg, "q", 1, ConfigValue::Nil),
            Err(BuildError::UnknownInstance(_))
        ));
        g.set_state("p", LifecycleState::Terminated);
        assert_eq!(
            g.set_config_value(&reg, "p", 2, ConfigValue::from_text("10.0.0.5")),
            Err(BuildError::NodeTerminated("p".into()))
        );
    }

    #[test]
    fn unknown_endpoint_is_rejected() {
        let reg = NodeRegistry::builtin();
        let mut g = graph("p :: Ping(localhost, 10.0.0.1);");
        let err = g
            .add_edge(
                &reg,
                EdgeSource::Output { node: "p".into(), index: 0 },
                EdgeTarget::Input { node: "nope".into(), index: 0 },
            )
            .unwrap_err();
        assert_eq!(err.to_string(), "unknown instance 'nope'");
    }
}
