use tsgraph::lang::{has_errors, parse_document, validate_document};
use tsgraph::nodes::NodeRegistry;

const DOC: &str = "
p :: Ping(localhost);
p[3] -> d :: Decision(p, no-such-function);
d -> Pingg(localhost, 10.0.0.1);
";

fn main() {
    let registry = NodeRegistry::builtin();
    let doc = parse_document(DOC, "broken.tsg").expect("syntax is fine");
    let diags = validate_document(&doc, &registry);
    for d in &diags {
        println!("broken.tsg:{d}");
    }
    println!("errors: {}", has_errors(&diags));

    match parse_document("p :: Ping(localhost", "cut.tsg") {
        Ok(_) => println!("unexpected"),
        Err(e) => println!("cut.tsg: {e}"),
    }
}
