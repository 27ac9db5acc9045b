mod common;

use std::io::{BufRead, BufReader};
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use common::{build, read_fixture, registry};
use tsgraph::api::{ApiServer, EngineHandle};
use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::nodes::sdn::http_request;

const DOC: &str = "\
src :: Filter(x);
src -> mark :: Filter(ttl) -> out;
mark -> [1]out;
";

fn server(doc: &str) -> (ApiServer, Arc<EngineHandle>) {
    let engine = Engine::start(build(doc), registry(), EngineOptions::default());
    let handle = Arc::new(EngineHandle::spawn(engine, None));
    let server = ApiServer::start(Some(handle.clone()), "127.0.0.1:0").unwrap();
    (server, handle)
}

fn get(s: &ApiServer, path: &str) -> (u16, Value) {
    let (status, body) = http_request("GET", &s.url(path), None).unwrap();
    (status, serde_json::from_str(&body).unwrap_or(Value::Null))
}

fn post(s: &ApiServer, path: &str, body: Value) -> (u16, Value) {
    let (status, body) = http_request("POST", &s.url(path), Some(&body.to_string())).unwrap();
    (status, serde_json::from_str(&body).unwrap_or(Value::Null))
}

#[test]
fn topology_lists_nodes_edges_and_views() {
    let (s, _h) = server(&read_fixture("fig2.tsg"));
    let (status, topo) = get(&s, "/topology");
    assert_eq!(status, 200);
    assert_eq!(topo["nodes"].as_array().unwrap().len(), 4);
    assert_eq!(topo["edges"].as_array().unwrap().len(), 4);
    assert_eq!(topo["views"].as_array().unwrap().len(), 1);
    let (status, classes) = get(&s, "/classes");
    assert_eq!(status, 200);
    assert!(classes.to_string().contains("Decision-summary"));
}

#[test]
fn inject_then_page_through_buffers() {
    let (s, _h) = server(DOC);
    for i in 0..5 {
        let (status, v) = post(&s, "/buffers/src:0/inject", json!({"text": format!("ttl={i}")}));
        assert_eq!(status, 200);
        assert_eq!(v["seq"], i);
    }
    let (status, page) = get(&s, "/buffers/src:0?from=1&limit=2");
    assert_eq!(status, 200);
    let records = page["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["text"], "ttl=1");
    assert_eq!(records[0]["origin"], "injected");
    assert_eq!(page["next_seq"], 3);
    assert_eq!(page["length"], 5);
    let (_, marked) = get(&s, "/buffers/mark:0");
    assert_eq!(marked["records"].as_array().unwrap().len(), 5);
    assert_eq!(marked["records"][0]["origin"], "node");
    let (_, capped) = get(&s, "/buffers/src:0?limit=100000");
    assert_eq!(capped["records"].as_array().unwrap().len(), 5);
}

#[test]
fn errors_map_to_status_codes() {
    let (s, _h) = server(DOC);
    assert_eq!(get(&s, "/buffers/nope:0").0, 404);
    assert_eq!(post(&s, "/buffers/nope:0/inject", json!({"text": "x"})).0, 404);
    assert_eq!(post(&s, "/nodes/nope/config", json!({"index": 1, "value": "y"})).0, 404);
    let bad_edge = json!({"src": {"node": "src", "output": 9}, "dst": {"node": "mark"}});
    assert_eq!(post(&s, "/edges", bad_edge).0, 400);
    assert_eq!(get(&s, "/events?kind=bogus").0, 400);

    let empty = ApiServer::start(None, "127.0.0.1:0").unwrap();
    assert_eq!(get(&empty, "/topology").0, 503);
    assert_eq!(post(&empty, "/buffers/src:0/inject", json!({"text": "x"})).0, 503);
}

#[test]
fn edits_and_commit() {
    let (s, h) = server(DOC);
    let edge = json!({"src": {"node": "src"}, "dst": {"node": "out", "input": 2}});
    let (status, v) = post(&s, "/edges", edge);
    assert_eq!(status, 200);
    assert_eq!(v["revision"], 1);
    let (status, v) = post(&s, "/nodes/mark/config", json!({"index": 1, "value": "icmp"}));
    assert_eq!(status, 200);
    assert_eq!(v["revision"], 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edited.tsg");
    let (status, v) = post(&s, "/commit", json!({"path": path}));
    assert_eq!(status, 200, "{v}");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(v["bytes"], text.len());
    let shape = h.call_blocking(|e| e.tsg().shape()).unwrap();
    assert_eq!(build(&text).shape(), shape);

    let (status, _) = post(&s, "/commit", json!({"path": dir.path().join("missing/x.tsg")}));
    assert_eq!(status, 500);
    assert_eq!(post(&s, "/commit", json!({})).0, 400);
}

/// Reads SSE frames until `count` events arrived; returns their ids.
fn read_events(url: String, count: usize) -> std::thread::JoinHandle<Vec<String>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(10)))
        .build()
        .into();
    let resp = agent.get(&url).call().unwrap();
    std::thread::spawn(move || {
        let reader = BufReader::new(resp.into_body().into_reader());
        let mut ids = Vec::new();
        for line in reader.lines() {
            let line = line.unwrap();
            if let Some(id) = line.strip_prefix("id:") {
                ids.push(id.trim().to_string());
                if ids.len() == count {
                    break;
                }
            }
        }
        ids
    })
}

#[test]
fn two_sse_clients_see_the_same_stream() {
    let (s, _h) = server(DOC);
    let a = read_events(s.url("/events"), 6);
    let b = read_events(s.url("/events"), 6);
    let only_injected = read_events(s.url("/events?kind=injected"), 2);
    post(&s, "/buffers/src:0/inject", json!({"text": "ttl=1"}));
    post(&s, "/buffers/src:0/inject", json!({"text": "ttl=2"}));
    let (a, b) = (a.join().unwrap(), b.join().unwrap());
    assert_eq!(a.len(), 6);
    assert_eq!(a, b);
    let injected = only_injected.join().unwrap();
    assert_eq!(injected.len(), 2);
    assert_eq!(injected[0], a[0]);
}
