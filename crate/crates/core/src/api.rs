//! HTTP control surface over a running engine, versioned under `/api/v1`.
//!
//! | method | path                       | body / query                  |
//! |--------|----------------------------|-------------------------------|
//! | GET    | `/topology`                |                               |
//! | GET    | `/classes`                 |                               |
//! | GET    | `/buffers/{id}`            | `?from=0&limit=100`           |
//! | POST   | `/buffers/{id}/inject`     | `{"text": "..."}`             |
//! | GET    | `/events`                  | `?node=a&kind=node-error`     |
//! | POST   | `/edges`                   | `{"src": {...}, "dst": {...}}`|
//! | POST   | `/nodes/{id}/config`       | `{"index": 2, "value": "x"}`  |
//! | POST   | `/commit`                  | `{"path": "..."}` (optional)  |
//!
//! The engine lives on its own thread; every request is a closure sent
//! over its command channel, so mutations never interleave.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, oneshot};

use crate::engine::{ClockMode, Engine, EngineError, EngineEvent, EngineReport, EventKind};
use crate::graph::{EdgeSource, EdgeTarget, Tsg};
use crate::lang::{serialize_document, ConfigValue};
use crate::nodes::{NodeClassSpec, SUMMARY_CLASS};

pub const MAX_PAGE: usize = 1000;
const EVENT_QUEUE: usize = 1024;

type Job = Box<dyn FnOnce(&mut Engine) + Send>;

/// Owner of the engine thread.
pub struct EngineHandle {
    jobs: mpsc::Sender<Job>,
    events: broadcast::Sender<EngineEvent>,
    thread: Option<JoinHandle<EngineReport>>,
    document: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("engine is not running")]
    Gone,
}

impl EngineHandle {
    /// Moves `engine` onto a service thread. In real-clock mode the thread
    /// also fires timers and collects process output between requests.
    pub fn spawn(mut engine: Engine, document: Option<PathBuf>) -> EngineHandle {
        let (events, _) = broadcast::channel(EVENT_QUEUE);
        let tx = events.clone();
        engine.subscribe(Box::new(move |e| {
            let _ = tx.send(e.clone());
        }));
        let (jobs, rx) = mpsc::channel::<Job>();
        let thread = std::thread::spawn(move || {
            let idle = Duration::from_millis(20);
            loop {
                let job = if engine.options().clock == ClockMode::Real {
                    engine.run_for(idle);
                    rx.try_recv()
                } else {
                    engine.run_until_idle();
                    rx.recv_timeout(idle).map_err(|e| match e {
                        mpsc::RecvTimeoutError::Timeout => mpsc::TryRecvError::Empty,
                        mpsc::RecvTimeoutError::Disconnected => mpsc::TryRecvError::Disconnected,
                    })
                };
                match job {
                    Ok(job) => {
                        job(&mut engine);
                        while let Ok(job) = rx.try_recv() {
                            job(&mut engine);
                        }
                    }
                    Err(mpsc::TryRecvError::Empty) => {}
                    Err(mpsc::TryRecvError::Disconnected) => break,
                }
                if engine.is_stopped() {
                    break;
                }
            }
            engine.stop()
        });
        EngineHandle {
            jobs,
            events,
            thread: Some(thread),
            document,
        }
    }

    /// Runs `f` on the engine thread and waits for its result.
    pub async fn call<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Engine) -> T + Send + 'static,
    {
        let (tx, rx) = oneshot::channel();
        self.jobs
            .send(Box::new(move |e| {
                let _ = tx.send(f(e));
            }))
            .map_err(|_| ApiError::Gone)?;
        rx.await.map_err(|_| ApiError::Gone)
    }

    /// Blocking variant of [`EngineHandle::call`] for non-async callers.
    pub fn call_blocking<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Engine) -> T + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        self.jobs
            .send(Box::new(move |e| {
                let _ = tx.send(f(e));
            }))
            .map_err(|_| ApiError::Gone)?;
        rx.recv().map_err(|_| ApiError::Gone)
    }

    pub fn subscribe(&self) -> broadcast::Receiver<EngineEvent> {
        self.events.subscribe()
    }

    pub fn document(&self) -> Option<&Path> {
        self.document.as_deref()
    }

    /// Stops the engine and joins its thread.
    pub fn shutdown(mut self) -> EngineReport {
        let _ = self.call_blocking(|e| {
            e.stop();
        });
        self.join()
    }

    fn join(&mut self) -> EngineReport {
        let (dead_tx, _) = mpsc::channel::<Job>();
        drop(std::mem::replace(&mut self.jobs, dead_tx));
        self.thread
            .take()
            .and_then(|t| t.join().ok())
            .unwrap_or(EngineReport {
                events: Vec::new(),
                buffer_lengths: BTreeMap::new(),
            })
    }
}

impl Drop for EngineHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            let _ = self.call_blocking(|e| {
                e.stop();
            });
            self.join();
        }
    }
}

/// Writes the serialized document atomically (temporary file, then rename)
/// and returns the byte count.
pub fn commit_document(tsg: &Tsg, path: &Path) -> std::io::Result<usize> {
    let text = serialize_document(&tsg.origin);
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("commit path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let written = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = written {
        let _ = std::fs::remove_file(&tmp);
        return Err(e);
    }
    Ok(text.len())
}

pub fn class_doc(spec: &NodeClassSpec) -> Value {
    serde_json::to_value(spec).unwrap_or(Value::Null)
}

/// Full snapshot of the running graph.
pub fn topology_json(engine: &Engine) -> Value {
    let tsg = engine.tsg();
    let nodes: Vec<Value> = tsg
        .nodes
        .values()
        .map(|n| {
            let configs: BTreeMap<String, Option<String>> = n
                .static_configs
                .iter()
                .map(|(i, v)| (i.to_string(), v.as_text()))
                .collect();
            json!({
                "id": n.id,
                "class": n.class,
                "state": n.state,
                "configs": configs,
                "input_count": n.input_count,
                "output_count": n.output_count,
                "display": engine.display(&n.id),
            })
        })
        .collect();
    let mut classes = serde_json::Map::new();
    for n in tsg.nodes.values() {
        if let Some(spec) = engine.registry().get(&n.class) {
            classes.insert(n.class.clone(), class_doc(spec));
        }
    }
    let summaries: Vec<&str> = tsg
        .nodes
        .values()
        .filter(|n| n.class == SUMMARY_CLASS)
        .map(|n| n.id.as_str())
        .collect();
    json!({
        "source": tsg.origin.source_name,
        "revision": tsg.revision,
        "nodes": nodes,
        "edges": tsg.edges,
        "views": tsg.views(),
        "groups": tsg.semantic_groups(),
        "summaries": summaries,
        "classes": classes,
    })
}

#[derive(Clone)]
struct ApiState {
    engine: Option<std::sync::Arc<EngineHandle>>,
}

fn error(status: StatusCode, msg: impl std::fmt::Display) -> Response {
    (status, Json(json!({"error": msg.to_string()}))).into_response()
}

fn engine_error(e: EngineError) -> Response {
    match e {
        EngineError::UnknownBuffer(_) | EngineError::UnknownNode(_) => error(StatusCode::NOT_FOUND, e),
        EngineError::Build(_) => error(StatusCode::BAD_REQUEST, e),
        EngineError::Stopped => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

macro_rules! engine_or_503 {
    ($state:expr) => {
        match &$state.engine {
            Some(h) => h.clone(),
            None => return error(StatusCode::SERVICE_UNAVAILABLE, "no engine attached"),
        }
    };
}

async fn get_topology(State(st): State<ApiState>) -> Response {
    let h = engine_or_503!(st);
    match h.call(|e| topology_json(e)).await {
        Ok(v) => Json(v).into_response(),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

async fn get_classes(State(st): State<ApiState>) -> Response {
    let h = engine_or_503!(st);
    let docs = h
        .call(|e| {
            e.registry()
                .specs()
                .map(|s| (s.class_name.clone(), class_doc(s)))
                .collect::<serde_json::Map<String, Value>>()
        })
        .await;
    match docs {
        Ok(v) => Json(Value::Object(v)).into_response(),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    #[serde(default)]
    from: u64,
    limit: Option<usize>,
}

async fn get_buffer(State(st): State<ApiState>, UrlPath(id): UrlPath<String>, Query(q): Query<PageQuery>) -> Response {
    let h = engine_or_503!(st);
    let limit = q.limit.unwrap_or(MAX_PAGE).min(MAX_PAGE);
    let page = h
        .call(move |e| {
            e.buffer(&id).map(|b| {
                let records = b.page(q.from, limit);
                let next = records.last().map_or(q.from.min(b.len()), |r| r.seq + 1);
                json!({"buffer": id, "records": records, "next_seq": next, "length": b.len()})
            })
        })
        .await;
    match page {
        Ok(Some(v)) => Json(v).into_response(),
        Ok(None) => error(StatusCode::NOT_FOUND, "unknown buffer"),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

#[derive(Debug, Deserialize)]
struct InjectBody {
    text: String,
}

async fn post_inject(State(st): State<ApiState>, UrlPath(id): UrlPath<String>, Json(body): Json<InjectBody>) -> Response {
    let h = engine_or_503!(st);
    let r = h
        .call(move |e| {
            let seq = e.inject(&id, &body.text)?;
            e.run_until_idle();
            Ok::<u64, EngineError>(seq)
        })
        .await;
    match r {
        Ok(Ok(seq)) => Json(json!({"seq": seq})).into_response(),
        Ok(Err(e)) => engine_error(e),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

/// One side of an edge in a request body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiEndpoint {
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<usize>,
    /// 1-based config argument.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<usize>,
    /// The node itself, for links into a View.
    #[serde(default, rename = "self", skip_serializing_if = "std::ops::Not::not")]
    pub whole: bool,
}

impl ApiEndpoint {
    pub fn source(&self) -> EdgeSource {
        if self.whole {
            EdgeSource::NodeSelf { node: self.node.clone() }
        } else {
            EdgeSource::Output {
                node: self.node.clone(),
                index: self.output.unwrap_or(0),
            }
        }
    }

    pub fn target(&self) -> EdgeTarget {
        match self.config {
            Some(index) => EdgeTarget::Config { node: self.node.clone(), index },
            None => EdgeTarget::Input {
                node: self.node.clone(),
                index: self.input.unwrap_or(0),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRequest {
    pub src: ApiEndpoint,
    pub dst: ApiEndpoint,
}

async fn post_edge(State(st): State<ApiState>, Json(body): Json<EdgeRequest>) -> Response {
    let h = engine_or_503!(st);
    let r = h
        .call(move |e| {
            let edge = e.add_edge(body.src.source(), body.dst.target())?;
            Ok::<_, EngineError>(json!({"edge": edge, "revision": e.tsg().revision}))
        })
        .await;
    match r {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err(e)) => engine_error(e),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

#[derive(Debug, Deserialize)]
struct ConfigBody {
    index: usize,
    /// `null` sets the argument to nil.
    value: Option<String>,
}

async fn post_config(State(st): State<ApiState>, UrlPath(id): UrlPath<String>, Json(body): Json<ConfigBody>) -> Response {
    let h = engine_or_503!(st);
    let value = match body.value {
        Some(v) => ConfigValue::from_text(&v),
        None => ConfigValue::Nil,
    };
    let r = h.call(move |e| e.set_config(&id, body.index, value)).await;
    match r {
        Ok(Ok(rev)) => Json(json!({"revision": rev})).into_response(),
        Ok(Err(e)) => engine_error(e),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

#[derive(Debug, Default, Deserialize)]
struct CommitBody {
    path: Option<PathBuf>,
}

async fn post_commit(State(st): State<ApiState>, body: Option<Json<CommitBody>>) -> Response {
    let h = engine_or_503!(st);
    let Json(body) = body.unwrap_or_default();
    let Some(path) = body.path.or_else(|| h.document().map(Path::to_path_buf)) else {
        return error(StatusCode::BAD_REQUEST, "no path given and no document attached");
    };
    let shown = path.display().to_string();
    let r = h.call(move |e| commit_document(e.tsg(), &path)).await;
    match r {
        Ok(Ok(bytes)) => Json(json!({"path": shown, "bytes": bytes})).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
struct EventFilter {
    node: Option<String>,
    kind: Option<String>,
}

impl EventFilter {
    fn admits(&self, e: &EngineEvent) -> bool {
        self.node.as_ref().is_none_or(|n| e.node.as_ref() == Some(n))
            && self.kind.as_ref().is_none_or(|k| e.kind.as_str() == k)
    }
}

fn event_stream(
    rx: broadcast::Receiver<EngineEvent>,
    filter: EventFilter,
) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold(Some(rx), move |state| {
        let filter = filter.clone();
        async move {
            let mut rx = state?;
            loop {
                match rx.recv().await {
                    Ok(e) if filter.admits(&e) => {
                        let ev = Event::default()
                            .event(e.kind.as_str())
                            .id(e.index.to_string())
                            .data(serde_json::to_string(&e).unwrap_or_default());
                        return Some((Ok(ev), Some(rx)));
                    }
                    Ok(_) => continue,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        let ev = Event::default().event("lagged").data(json!({"missed": n}).to_string());
                        return Some((Ok(ev), None));
                    }
                    Err(broadcast::error::RecvError::Closed) => return None,
                }
            }
        }
    })
}

async fn get_events(State(st): State<ApiState>, Query(filter): Query<EventFilter>) -> Response {
    let h = engine_or_503!(st);
    if let Some(k) = &filter.kind {
        if EventKind::parse(k).is_none() {
            return error(StatusCode::BAD_REQUEST, format!("unknown event kind '{k}'"));
        }
    }
    Sse::new(event_stream(h.subscribe(), filter))
        .keep_alive(KeepAlive::default())
        .into_response()
}

/// Routes for `engine`; without one every endpoint answers 503.
pub fn router(engine: Option<std::sync::Arc<EngineHandle>>) -> Router {
    let api = Router::new()
        .route("/topology", get(get_topology))
        .route("/classes", get(get_classes))
        .route("/buffers/{id}", get(get_buffer))
        .route("/buffers/{id}/inject", post(post_inject))
        .route("/events", get(get_events))
        .route("/edges", post(post_edge))
        .route("/nodes/{id}/config", post(post_config))
        .route("/commit", post(post_commit))
        .with_state(ApiState { engine });
    Router::new().nest("/api/v1", api)
}

/// A server running on its own thread, for tests and embedding.
pub struct ApiServer {
    pub addr: std::net::SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ApiServer {
    pub fn start(engine: Option<std::sync::Arc<EngineHandle>>, listen: &str) -> std::io::Result<ApiServer> {
        let listener = std::net::TcpListener::bind(listen)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(engine);
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("tokio runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(ApiServer {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}/api/v1{path}", self.addr)
    }
}

impl Drop for ApiServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use futures::StreamExt;

    fn event(index: u64) -> EngineEvent {
        EngineEvent {
            index,
            kind: EventKind::Injected,
            node: Some("n".into()),
            buffer: None,
            seq_range: None,
            enqueued: vec![],
            detail: None,
            timestamp: 0,
        }
    }

    #[tokio::test]
    async fn slow_consumer_gets_a_final_lagged_event() {
        let (tx, rx) = broadcast::channel(4);
        for i in 0..10 {
            tx.send(event(i)).unwrap();
        }
        let items: Vec<_> = event_stream(rx, EventFilter::default()).collect().await;
        assert_eq!(items.len(), 1);
        let shown = format!("{:?}", items[0].as_ref().unwrap());
        assert!(shown.contains("lagged"), "{shown}");
    }

    #[tokio::test]
    async fn filter_keeps_matching_events() {
        let (tx, rx) = broadcast::channel(16);
        let mut other = event(1);
        other.node = Some("m".into());
        tx.send(event(0)).unwrap();
        tx.send(other).unwrap();
        tx.send(event(2)).unwrap();
        drop(tx);
        let filter = EventFilter { node: Some("n".into()), kind: None };
        let items: Vec<_> = event_stream(rx, filter).collect().await;
        assert_eq!(items.len(), 2);
    }
}
