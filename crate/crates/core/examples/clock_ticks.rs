use std::sync::Arc;

use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::NodeRegistry;

fn main() {
    let doc = parse_document(
        "c :: Clock(2) -> f :: Format(\"tick #{0}\") -> Filter(#[02468]$) -> out;",
        "ticks",
    )
    .unwrap();
    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = build_graph(&doc, &registry).unwrap();
    let mut engine = Engine::start(tsg, registry, EngineOptions::default());

    for t in [0, 2_000, 4_000, 10_000] {
        engine.advance_to(t);
        println!("t={t}ms {}", engine.display("out").unwrap_or_default().replace('\n', " | "));
    }
    for e in engine.events().iter().take(8) {
        println!("{:>3} {:<15} {}", e.index, e.kind.as_str(), e.node.as_deref().unwrap_or("-"));
    }
}
