use std::sync::Arc;

use tsgraph::api::commit_document;
use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::graph::{build_graph, EdgeSource, EdgeTarget};
use tsgraph::lang::{parse_document, ConfigValue};
use tsgraph::nodes::NodeRegistry;

fn main() -> std::io::Result<()> {
    let doc = parse_document("ping :: Ping(localhost, 10.0.0.1);\nping -> d :: Decision(ping, string-match, ttl);", "g").unwrap();
    let registry = Arc::new(NodeRegistry::builtin());
    let mut engine = Engine::start(build_graph(&doc, &registry).unwrap(), registry, EngineOptions::default());

    engine
        .add_edge(
            EdgeSource::Output { node: "d".into(), index: 2 },
            EdgeTarget::Input { node: "d".into(), index: 1 },
        )
        .map(|e| println!("added {}", e.id))
        .unwrap_or_else(|e| println!("rejected: {e}"));
    engine.set_config("ping", 2, ConfigValue::from_text("10.0.0.254")).unwrap();
    engine.set_config("ping", 3, ConfigValue::Int(5)).unwrap();

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("edited.tsg");
    let n = commit_document(engine.tsg(), &path)?;
    println!("wrote {n} bytes, revision {}", engine.tsg().revision);
    print!("{}", std::fs::read_to_string(&path)?);
    Ok(())
}
