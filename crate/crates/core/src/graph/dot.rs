use std::fmt::Write;

use super::{EdgeSource, EdgeTarget, Tsg};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz text for a graph. Input links are solid, config links dashed and
/// node-self links into Views dotted.
pub fn export_dot(tsg: &Tsg) -> String {
    let mut out = String::from("digraph tsg {\n");
    for node in tsg.nodes.values() {
        let _ = writeln!(
            out,
            "  {} [label={}];",
            quote(&node.id),
            quote(&format!("{} : {}", node.id, node.class))
        );
    }
    for edge in &tsg.edges {
        let (from_port, style) = match &edge.src {
            EdgeSource::Output { index, .. } => (index.to_string(), "solid"),
            EdgeSource::NodeSelf { .. } => ("self".to_string(), "dotted"),
        };
        let (to_port, style) = match &edge.dst {
            EdgeTarget::Input { index, .. } => (index.to_string(), style),
            EdgeTarget::Config { index, .. } => (format!("-{index}"), "dashed"),
        };
        let _ = writeln!(
            out,
            "  {} -> {} [id={}, label={}, style={}];",
            quote(edge.src.node()),
            quote(edge.dst.node()),
            quote(&edge.id),
            quote(&format!("{from_port}:{to_port}")),
            style
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::lang::parse_document;
    use crate::nodes::NodeRegistry;

    #[test]
    fn empty_graph_is_header_and_footer() {
        assert_eq!(export_dot(&Tsg::empty("e")), "digraph tsg {\n}\n");
    }

    #[test]
    fn styles_follow_edge_kind() {
        let doc = parse_document(
            "c :: Clock(1) -> f :: Function(identity, input-0)[0, 0] -> [0, -2]a :: Arp(localhost, nil, -n);\nf --> v;",
            "t",
        )
        .unwrap();
        let dot = export_dot(&build_graph(&doc, &NodeRegistry::builtin()).unwrap());
        assert_eq!(dot.matches("style=dashed").count(), 1, "{dot}");
        assert_eq!(dot.matches("style=dotted").count(), 1, "{dot}");
        assert_eq!(dot.matches("style=solid").count(), 2, "{dot}");
        assert!(dot.contains("label=\"a : Arp\""));
    }
}
