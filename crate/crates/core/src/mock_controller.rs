//! An in-process HTTP server answering like a POX, Floodlight or
//! OpenDaylight controller, driven by a small fixture.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use tokio::sync::oneshot;

use crate::nodes::sdn::Flavor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchFixture {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowFixture {
    pub switch: u64,
    #[serde(default)]
    pub nw_src: Option<String>,
    #[serde(default)]
    pub nw_dst: Option<String>,
    pub out_port: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerFixture {
    pub switches: Vec<SwitchFixture>,
    pub flows: Vec<FlowFixture>,
    #[serde(default)]
    pub links: Vec<(u64, u64)>,
}

impl ControllerFixture {
    pub fn from_json(text: &str) -> Result<ControllerFixture, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn dpids_json(&self, flavor: Flavor) -> Json {
        let ids = self.switches.iter().map(|s| (flavor.format_dpid(s.id), &s.name));
        match flavor {
            Flavor::Pox => Json::Array(ids.map(|(d, n)| json!({"dpid": d, "name": n})).collect()),
            Flavor::Floodlight => Json::Array(
                ids.map(|(d, n)| json!({"switchDPID": d, "name": n, "inetAddress": "/127.0.0.1"}))
                    .collect(),
            ),
            Flavor::Odl => json!({"nodes": {"node": ids.map(|(d, n)| json!({"id": d, "name": n})).collect::<Vec<_>>()}}),
        }
    }

    /// `None` for an unknown switch.
    pub fn flows_json(&self, flavor: Flavor, dpid: &str) -> Option<Json> {
        let id = flavor.parse_dpid(dpid)?;
        if !self.switches.iter().any(|s| s.id == id) {
            return None;
        }
        let flows = self.flows.iter().filter(|f| f.switch == id);
        Some(match flavor {
            Flavor::Pox => Json::Array(
                flows
                    .map(|f| {
                        let mut m = serde_json::Map::new();
                        if let Some(s) = &f.nw_src {
                            m.insert("nw_src".into(), json!(s));
                        }
                        if let Some(d) = &f.nw_dst {
                            m.insert("nw_dst".into(), json!(d));
                        }
                        json!({"match": m, "actions": [{"type": "OFPAT_OUTPUT", "port": f.out_port}]})
                    })
                    .collect(),
            ),
            Flavor::Floodlight => {
                let list: Vec<Json> = flows
                    .map(|f| {
                        let mut m = serde_json::Map::new();
                        if let Some(s) = &f.nw_src {
                            m.insert("ipv4_src".into(), json!(s));
                        }
                        if let Some(d) = &f.nw_dst {
                            m.insert("ipv4_dst".into(), json!(d));
                        }
                        json!({
                            "match": m,
                            "instructions": {"instruction_apply_actions": {"actions": format!("output={}", f.out_port)}}
                        })
                    })
                    .collect();
                json!({ dpid: list })
            }
            Flavor::Odl => {
                let list: Vec<Json> = flows
                    .map(|f| {
                        let mut m = serde_json::Map::new();
                        if let Some(s) = &f.nw_src {
                            m.insert("ipv4-source".into(), json!(s));
                        }
                        if let Some(d) = &f.nw_dst {
                            m.insert("ipv4-destination".into(), json!(d));
                        }
                        json!({"match": m, "actions": [format!("output:{}", f.out_port)]})
                    })
                    .collect();
                json!({ "flows": list })
            }
        })
    }

    pub fn topology_json(&self, flavor: Flavor) -> Json {
        let links = self
            .links
            .iter()
            .map(|(a, b)| (flavor.format_dpid(*a), flavor.format_dpid(*b)));
        match flavor {
            Flavor::Pox => Json::Array(links.map(|(a, b)| json!({"src": {"dpid": a}, "dst": {"dpid": b}})).collect()),
            Flavor::Floodlight => {
                Json::Array(links.map(|(a, b)| json!({"src-switch": a, "dst-switch": b})).collect())
            }
            Flavor::Odl => json!({"topology": [{
                "link": links
                    .map(|(a, b)| json!({"source": {"source-node": a}, "destination": {"dest-node": b}}))
                    .collect::<Vec<_>>()
            }]}),
        }
    }
}

/// One request as the mock saw it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
    pub body: String,
}

struct Shared {
    fixture: ControllerFixture,
    flavor: Flavor,
    requests: Mutex<Vec<RecordedRequest>>,
}

/// A running mock controller; stops when dropped.
pub struct MockController {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

async fn answer(State(shared): State<Arc<Shared>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let path = uri.path().to_string();
    shared.requests.lock().expect("request log").push(RecordedRequest {
        method: method.to_string(),
        path: path.clone(),
        body: String::from_utf8_lossy(&body).into_owned(),
    });
    let f = &shared.fixture;
    let doc = match path.as_str() {
        "/dpids" => Some(f.dpids_json(shared.flavor)),
        "/topology" => Some(f.topology_json(shared.flavor)),
        p => match p.strip_prefix("/flowstats/") {
            Some(dpid) => f.flows_json(shared.flavor, dpid),
            // Anything else echoes the request body.
            None if method != Method::GET => {
                return (StatusCode::OK, String::from_utf8_lossy(&body).into_owned()).into_response();
            }
            None => None,
        },
    };
    match doc {
        Some(d) => (StatusCode::OK, [("content-type", "application/json")], d.to_string()).into_response(),
        None => (StatusCode::NOT_FOUND, "not found").into_response(),
    }
}

impl MockController {
    pub fn start(fixture: ControllerFixture, flavor: Flavor) -> std::io::Result<MockController> {
        let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            fixture,
            flavor,
            requests: Mutex::new(Vec::new()),
        });
        let (tx, rx) = oneshot::channel::<()>();
        let (ready_tx, ready_rx) = std::sync::mpsc::channel::<std::io::Result<()>>();
        let app = Router::new().fallback(answer).with_state(shared.clone());
        let thread = std::thread::spawn(move || {
            let rt = match tokio::runtime::Builder::new_current_thread().enable_all().build() {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(e));
                    return;
                }
            };
            rt.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                        return;
                    }
                };
                let _ = ready_tx.send(Ok(()));
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        ready_rx
            .recv()
            .unwrap_or_else(|_| Err(std::io::Error::other("mock controller thread died")))?;
        Ok(MockController {
            addr,
            shared,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn flavor(&self) -> Flavor {
        self.shared.flavor
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.shared.requests.lock().expect("request log").clone()
    }
}

impl Drop for MockController {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
