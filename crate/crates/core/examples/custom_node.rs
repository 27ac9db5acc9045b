//! A node class defined outside the crate: counts the words it receives.

use std::sync::Arc;

use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::{callback, noop, NodeClassSpec, NodeRegistry};

#[derive(Default)]
struct Seen(usize);

fn word_count() -> NodeClassSpec {
    NodeClassSpec::new("Word-count", "running word count of its input")
        .input("text", "any text")
        .output("count", "words seen so far")
        .on_init(noop())
        .on_exec(callback(|ctx| {
            let words = ctx.read_delta(0).split_whitespace().count();
            let seen = ctx.state::<Seen>();
            seen.0 += words;
            let total = seen.0;
            ctx.set_display(format!("{total} words"));
            ctx.write(0, total.to_string())
        }))
        .on_term(noop())
}

fn main() {
    let mut registry = NodeRegistry::builtin();
    registry.register(word_count()).unwrap();
    let registry = Arc::new(registry);

    let doc = parse_document("src :: Filter(x); src -> wc :: Word-count() -> out;", "wc").unwrap();
    let mut engine = Engine::start(build_graph(&doc, &registry).unwrap(), registry, EngineOptions::default());
    for line in ["one two", "three", "four five six"] {
        engine.inject("src:0", line).unwrap();
        engine.run_until_idle();
        println!("{}", engine.display("wc").unwrap());
    }
    let report = engine.stop();
    println!("{} events, buffers {:?}", report.events.len(), report.buffer_lengths);
}
