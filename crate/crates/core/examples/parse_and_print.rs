use tsgraph::graph::{build_graph, export_dot};
use tsgraph::lang::{parse_document, serialize_document};
use tsgraph::nodes::NodeRegistry;

const DOC: &str = "
Clock(5) -> t :: Topology-SDN(localhost)
  -> Graph() --> view;
t[0] -> [1]view;
";

fn main() {
    let doc = parse_document(DOC, "fig2").expect("parses");
    print!("{}", serialize_document(&doc));

    let tsg = build_graph(&doc, &NodeRegistry::builtin()).expect("builds");
    for (id, node) in &tsg.nodes {
        println!("# {id}: {} in={} out={}", node.class, node.input_count, node.output_count);
    }
    print!("{}", export_dot(&tsg));
}
