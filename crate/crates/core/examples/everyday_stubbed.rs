//! The everyday troubleshooting graph against canned tool output.
//!
//! cargo run --example everyday_stubbed -- [a|b|c|d]

use std::path::Path;
use std::sync::Arc;

use tsgraph::engine::{Engine, EngineOptions, EventKind};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::NodeRegistry;

fn main() {
    let scenario = std::env::args().nth(1).unwrap_or_else(|| "c".into());
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let text = std::fs::read_to_string(root.join("everyday-full.tsg")).unwrap();

    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = build_graph(&parse_document(&text, "everyday-full.tsg").unwrap(), &registry).unwrap();
    let opts = EngineOptions::default().with_stub_dir(root.join("scenarios").join(&scenario));
    let mut engine = Engine::start(tsg, registry, opts);
    engine.run_until_idle();

    let ran: Vec<&str> = engine
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::NodeExecuted)
        .filter_map(|e| e.node.as_deref())
        .collect();
    println!("scenario {scenario}: {}", ran.join(" "));
    println!("{}", engine.display("ds").unwrap_or_default());
}
