//! Real processes: a Command node on this machine, output streamed into
//! its buffer and checked by a Decision.

use std::sync::Arc;
use std::time::Duration;

use tsgraph::engine::{ClockMode, Engine, EngineOptions};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::NodeRegistry;

const DOC: &str = r#"
uname :: Command(localhost, "uname -s; echo done");
uname -> d :: Decision(uname, string-match, done);
d[2] -> ds :: Decision-summary();
"#;

fn main() {
    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = build_graph(&parse_document(DOC, "local").unwrap(), &registry).unwrap();
    let opts = EngineOptions { clock: ClockMode::Real, ..EngineOptions::default() };
    let mut engine = Engine::start(tsg, registry, opts);
    engine.run_until_quiescent(Duration::from_secs(10));

    for r in engine.buffer("uname:0").unwrap().records() {
        println!("{:?} {:?}", r.kind, r.text);
    }
    println!("{}", engine.display("ds").unwrap_or_default());
}
