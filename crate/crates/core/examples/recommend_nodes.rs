use std::path::Path;

use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::NodeRegistry;
use tsgraph::recommend::{index_directory, recommend_nodes};

fn main() {
    let repo = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let index = index_directory(&repo);
    for f in &index.files {
        println!("{} {}", if f.ok { "ok  " } else { "skip" }, f.path.display());
    }

    let current = parse_document("p :: Ping(localhost, 10.0.0.1) -> d :: Decision(p);", "mine").unwrap();
    let tsg = build_graph(&current, &NodeRegistry::builtin()).unwrap();
    for (class, n) in recommend_nodes(&index, &tsg, 5) {
        println!("{class} {n}");
    }
}
