use std::fmt::Write;

use super::ast::*;

/// Canonical text: one statement per line, single spaces around operators,
/// explicit port lists kept exactly as written.
pub fn serialize_document(doc: &TsgDocument) -> String {
    let mut out = String::new();
    for stmt in &doc.statements {
        out.push_str(&serialize_statement(stmt));
        out.push('\n');
    }
    out
}

pub fn serialize_statement(stmt: &Statement) -> String {
    let mut out = String::new();
    match stmt {
        Statement::Decl(d) => write_decl(&mut out, d),
        Statement::Chain(chain) => {
            write_endpoint(&mut out, &chain.endpoints[0]);
            for (i, op) in chain.ops.iter().enumerate() {
                out.push(' ');
                out.push_str(op.as_str());
                out.push(' ');
                write_endpoint(&mut out, &chain.endpoints[i + 1]);
            }
        }
    }
    out.push(';');
    out
}

fn write_decl(out: &mut String, d: &NodeDecl) {
    if let Some(name) = &d.name {
        out.push_str(name);
        out.push_str(" :: ");
    }
    out.push_str(&d.class);
    out.push('(');
    for (i, arg) in d.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_value(out, arg);
    }
    out.push(')');
}

pub(crate) fn write_value(out: &mut String, value: &ConfigValue) {
    match value {
        ConfigValue::Bare(s) | ConfigValue::Sexpr(s) => out.push_str(s),
        ConfigValue::Int(n) => {
            let _ = write!(out, "{n}");
        }
        ConfigValue::Nil => out.push_str("nil"),
        ConfigValue::Quoted(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
    }
}

fn write_ports(out: &mut String, ports: &[PortRef]) {
    out.push('[');
    for (i, p) in ports.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        if p.kind == PortKind::Config {
            out.push('-');
        }
        let _ = write!(out, "{}", p.index);
    }
    out.push(']');
}

fn write_endpoint(out: &mut String, ep: &Endpoint) {
    if let Some(ports) = &ep.inputs {
        write_ports(out, ports);
    }
    match &ep.target {
        EndpointTarget::Name(n) => out.push_str(n),
        EndpointTarget::Decl(d) => write_decl(out, d),
    }
    if let Some(ports) = &ep.outputs {
        write_ports(out, ports);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_document;

    #[test]
    fn topology_listing_is_reproduced() {
        let text = "Clock(5) -> t :: Topology-SDN(localhost)\n   -> Graph() --> view;\nt[0] -> [1]view;";
        let doc = parse_document(text, "fig2").unwrap();
        assert_eq!(
            serialize_document(&doc),
            "Clock(5) -> t :: Topology-SDN(localhost) -> Graph() --> view;\nt[0] -> [1]view;\n"
        );
    }

    #[test]
    fn empty_document_serializes_to_nothing() {
        assert_eq!(serialize_document(&TsgDocument::new("e")), "");
    }

    #[test]
    fn config_port_lists_are_kept() {
        let doc = parse_document(
            "ifc-decision -> Function(ifconfig-get-interfaces, 'input-0)[0, 0]\n->  [0, -2]arp;",
            "l1",
        )
        .unwrap();
        let text = serialize_document(&doc);
        assert!(text.contains("[0, -2]arp"), "{text}");
        assert!(text.contains("'input-0)[0, 0] -> "), "{text}");
    }

    #[test]
    fn from_text_values_survive_a_round_trip() {
        for raw in ["plain", "with space", "a,b", "\"q\"", "", "nil", "-12", "(f x)", "(a, b)", "x(y"] {
            let mut doc = TsgDocument::new("v");
            doc.statements.push(Statement::Decl(NodeDecl {
                name: Some("n".into()),
                class: "C".into(),
                args: vec![ConfigValue::from_text(raw)],
                span: SourceSpan::default(),
            }));
            let text = serialize_document(&doc);
            let back = parse_document(&text, "v").unwrap();
            assert!(doc.structurally_eq(&back), "{raw:?} -> {text}");
        }
    }
}
