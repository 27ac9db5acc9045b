//! Flow tables from a (mock) controller narrowed to one flow space.

use std::path::Path;
use std::sync::Arc;

use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::mock_controller::{ControllerFixture, MockController};
use tsgraph::nodes::sdn::Flavor;
use tsgraph::nodes::NodeRegistry;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sdn");
    let fixture = ControllerFixture::from_json(&std::fs::read_to_string(root.join("controller.json")).unwrap()).unwrap();
    let flavor = match std::env::args().nth(1).as_deref() {
        Some(f) => Flavor::parse(f).expect("pox, floodlight or odl"),
        None => Flavor::Pox,
    };
    let mock = MockController::start(fixture, flavor).unwrap();

    let text = std::fs::read_to_string(root.join("flow-space.tsg"))
        .unwrap()
        .replace("-POX(", &format!("-{}(", flavor.suffix()))
        .replace("CONTROLLER", &mock.base_url());
    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = build_graph(&parse_document(&text, "flow-space").unwrap(), &registry).unwrap();
    let mut engine = Engine::start(tsg, registry, EngineOptions::default());
    engine.run_until_idle();

    println!("{}", engine.buffer("table:0").unwrap().latest().unwrap_or(""));
    for r in mock.requests() {
        println!("{} {}", r.method, r.path);
    }
}
