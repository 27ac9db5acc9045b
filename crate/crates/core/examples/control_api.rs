//! Serve a graph over HTTP and drive it with a few requests.

use std::sync::Arc;

use tsgraph::api::{ApiServer, EngineHandle};
use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::graph::build_graph;
use tsgraph::lang::parse_document;
use tsgraph::nodes::sdn::http_request;
use tsgraph::nodes::NodeRegistry;

fn main() {
    let doc = parse_document("src :: Filter(x); src -> f :: Filter(loss) -> out;", "api").unwrap();
    let registry = Arc::new(NodeRegistry::builtin());
    let engine = Engine::start(build_graph(&doc, &registry).unwrap(), registry, EngineOptions::default());
    let handle = Arc::new(EngineHandle::spawn(engine, None));
    let server = ApiServer::start(Some(handle), "127.0.0.1:0").unwrap();
    println!("serving {}", server.url(""));

    let calls = [
        ("POST", "/buffers/src:0/inject", r#"{"text": "3 packets, 0% packet loss"}"#),
        ("POST", "/nodes/f/config", r#"{"index": 1, "value": "packets"}"#),
        ("POST", "/buffers/src:0/inject", r#"{"text": "3 packets, 0% packet loss"}"#),
        ("GET", "/buffers/f:0?from=0&limit=10", ""),
        ("GET", "/buffers/missing:0", ""),
    ];
    for (method, path, body) in calls {
        let (status, text) = http_request(method, &server.url(path), Some(body)).unwrap();
        println!("{method} {path} -> {status} {text}");
    }
}
