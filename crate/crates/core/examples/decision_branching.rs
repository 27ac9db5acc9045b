use std::sync::Arc;

use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::decision::DecisionStatus;
use tsgraph::nodes::NodeRegistry;

// Passes once the first probe shows a ttl and the second is non-empty.
const DOC: &str = "
a :: Filter(x);
b :: Filter(x);
d :: Decision(reach, string-match, ttl, (lambda (x) (> (length x) 0)), nil, combine=and);
a -> [0]d;
b -> [1]d;
d[0] -> ok;
d[1] -> broken;
d[2] -> status;
";

fn main() {
    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = build_graph(&parse_document(DOC, "d").unwrap(), &registry).unwrap();
    let mut engine = Engine::start(tsg, registry, EngineOptions::default());

    for (buf, text) in [("a:0", "64 bytes: ttl=61"), ("b:0", ""), ("b:0", "eth0")] {
        engine.inject(buf, text).unwrap();
        engine.run_until_idle();
        let latest = engine.buffer("d:2").unwrap().latest().unwrap();
        let st = DecisionStatus::from_json(latest).unwrap();
        println!("{buf} <- {text:?}: {:?} {}", st.result, st.detail);
    }
    println!("positive: {:?}", engine.buffer("d:0").unwrap().latest());
    println!("negative: {:?}", engine.buffer("d:1").unwrap().latest());
}
